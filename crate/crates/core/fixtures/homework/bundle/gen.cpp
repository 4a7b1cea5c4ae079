#include "testlib.h"
#include <iostream>
using namespace std;

// gen <n> <maxv> [salt]
int main(int argc, char *argv[]) {
    registerGen(argc, argv, 1);
    int n = atoi(argv[1]);
    int maxv = atoi(argv[2]);
    cout << n << "\n";
    for (int i = 0; i < n; i++) cout << rnd.next(0, maxv) << (i + 1 < n ? ' ' : '\n');
}
