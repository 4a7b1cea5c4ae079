// Exemplar generator shipped with this repository (not part of the
// original prompt). Problem: print N random integers in [1, maxv].
// Usage: gen <n> <maxv> [salt]
#include "testlib.h"
#include <iostream>
using namespace std;

int main(int argc, char* argv[]) {
    registerGen(argc, argv, 1);
    int n = atoi(argv[1]);
    int maxv = atoi(argv[2]);
    cout << n << "\n";
    for (int i = 0; i < n; i++) {
        cout << rnd.next(1, maxv) << (i + 1 < n ? ' ' : '\n');
    }
    return 0;
}
