#include "testlib.h"
#include <iostream>
using namespace std;

// gen <n> <maxv> <erased_percent> [salt]
int main(int argc, char *argv[]) {
    registerGen(argc, argv, 1);
    int n = atoi(argv[1]);
    int maxv = atoi(argv[2]);
    int erased = atoi(argv[3]);
    cout << n << "\n";
    for (int i = 0; i < n; i++) {
        int v = rnd.next(1, 100) <= erased ? -1 : rnd.next(1, maxv);
        cout << v << (i + 1 < n ? ' ' : '\n');
    }
}
