#include "testlib.h"
#include <iostream>
#include <string>
using namespace std;

// gen <c> <n> [maxgap] [salt]   or   gen <c> 8 sample
int main(int argc, char *argv[]) {
    registerGen(argc, argv, 1);
    int c = atoi(argv[1]);
    int n = atoi(argv[2]);
    if (argc > 3 && string(argv[3]) == "sample") {
        cout << c << " 8\n"
             << "b i 0 10 28\nf i 0 10 30\nb e 0 10 33\nf e 0 10 40\n"
             << "b i 0 10 41\nf e 0 10 48\nf i 0 10 58\nf i 0 11 4\n";
        return 0;
    }
    int maxgap = argc > 3 ? atoi(argv[3]) : 5;
    cout << c << " " << n << "\n";
    int t = rnd.next(0, 3600);
    for (int i = 0; i < n; i++) {
        t = min(t + rnd.next(0, maxgap), 24 * 3600 - 1);
        char g = rnd.next(2) ? 'b' : 'f';
        char a = rnd.next(2) ? 'i' : 'e';
        cout << g << ' ' << a << ' ' << t / 3600 << ' ' << t / 60 % 60 << ' ' << t % 60 << "\n";
    }
}
