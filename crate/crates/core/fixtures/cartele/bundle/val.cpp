#include "testlib.h"
#include <string>

int main(int argc, char *argv[]) {
    registerValidation(argc, argv);
    inf.readInt(1, 3, "C");
    inf.readSpace();
    int n = inf.readInt(1, 100000, "N");
    inf.readEoln();
    int last = -1;
    for (int i = 0; i < n; i++) {
        std::string g = inf.readToken();
        ensuref(g == "b" || g == "f", "entry %d: bad gender '%s'", i + 1, g.c_str());
        inf.readSpace();
        std::string a = inf.readToken();
        ensuref(a == "i" || a == "e", "entry %d: bad action '%s'", i + 1, a.c_str());
        inf.readSpace();
        int h = inf.readInt(0, 23, "h");
        inf.readSpace();
        int m = inf.readInt(0, 59, "m");
        inf.readSpace();
        int s = inf.readInt(0, 59, "s");
        inf.readEoln();
        int t = h * 3600 + m * 60 + s;
        ensuref(t >= last, "entry %d goes back in time", i + 1);
        last = t;
    }
    inf.readEof();
}
