#include "testlib.h"

int main(int argc, char *argv[]) {
    registerValidation(argc, argv);
    int n = inf.readInt(1, 200000, "n");
    inf.readEoln();
    for (int i = 0; i < n; i++) {
        if (i > 0) inf.readSpace();
        int v = inf.readInt(-1, 1000000000, "a_i");
        ensuref(v == -1 || v >= 1, "a_%d = %d is neither -1 nor positive", i + 1, v);
    }
    inf.readEoln();
    inf.readEof();
}
