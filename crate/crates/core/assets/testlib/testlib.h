// Minimal testlib-compatible header.
//
// Implements the subset of the testlib API that generators, validators and
// checkers in this repository rely on: registerGen / registerValidation /
// registerTestlibCmd, the `rnd` generator, `opt<T>`, strict input streams,
// ensure/ensuref and quitf. The random generator is seeded from argv, so a
// generator invoked with the same arguments prints the same test.
//
// The random sequence is NOT bit-compatible with upstream testlib.

#ifndef JUDGEFORGE_TESTLIB_H
#define JUDGEFORGE_TESTLIB_H

#include <algorithm>
#include <cctype>
#include <climits>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

enum TResult { _ok = 0, _wa = 1, _pe = 2, _fail = 3 };

static std::string __testlib_vformat(const char *fmt, va_list ap) {
    char buf[4096];
    vsnprintf(buf, sizeof buf, fmt, ap);
    return std::string(buf);
}

static std::string format(const char *fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = __testlib_vformat(fmt, ap);
    va_end(ap);
    return s;
}

[[noreturn]] static void quit(TResult result, const std::string &msg) {
    const char *tag = result == _ok ? "ok" : result == _wa ? "wrong answer" : result == _pe ? "wrong output format" : "FAIL";
    std::fprintf(stderr, "%s %s\n", tag, msg.c_str());
    std::exit(int(result));
}

[[noreturn]] static void quitf(TResult result, const char *fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = __testlib_vformat(fmt, ap);
    va_end(ap);
    quit(result, s);
}

#define ensure(cond) \
    do { if (!(cond)) quitf(_fail, "ensure failed: %s", #cond); } while (0)

static void ensuref(bool cond, const char *fmt, ...) {
    if (cond) return;
    va_list ap;
    va_start(ap, fmt);
    std::string s = __testlib_vformat(fmt, ap);
    va_end(ap);
    quit(_fail, s);
}

class random_t {
    uint64_t state = 0x9E3779B97F4A7C15ULL;

    uint64_t nextBits() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t below(uint64_t n) {
        if (n == 0) quitf(_fail, "random_t::next: empty range");
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do { x = nextBits(); } while (x >= limit);
        return x % n;
    }

public:
    void setSeed(uint64_t seed) { state = seed ^ 0x243F6A8885A308D3ULL; }

    int next(int n) { return int(below(uint64_t(n))); }
    long long next(long long n) { return (long long)below(uint64_t(n)); }
    int next(int from, int to) {
        if (from > to) quitf(_fail, "random_t::next(%d, %d): from > to", from, to);
        return from + int(below(uint64_t((long long)to - from + 1)));
    }
    long long next(long long from, long long to) {
        if (from > to) quitf(_fail, "random_t::next: from > to");
        uint64_t span = uint64_t(to) - uint64_t(from) + 1;
        if (span == 0) return (long long)nextBits();
        return (long long)(uint64_t(from) + below(span));
    }
    double next() { return (nextBits() >> 11) * (1.0 / 9007199254740992.0); }
    double next(double from, double to) { return from + next() * (to - from); }

    template <typename C>
    typename C::value_type any(const C &c) {
        return *std::next(c.begin(), next(int(c.size())));
    }

    // Weighted towards the top of the range for positive `type`.
    int wnext(int n, int type) {
        int r = next(n);
        for (int i = 0; i < type; i++) r = std::max(r, next(n));
        for (int i = 0; i < -type; i++) r = std::min(r, next(n));
        return r;
    }
    int wnext(int from, int to, int type) { return from + wnext(to - from + 1, type); }

    template <typename T>
    std::vector<T> perm(T n) {
        std::vector<T> p(n);
        for (T i = 0; i < n; i++) p[i] = i;
        for (T i = n - 1; i > 0; i--) std::swap(p[i], p[next((long long)i + 1)]);
        return p;
    }
};

static random_t rnd;

template <typename It>
void shuffle(It begin, It end) {
    long long n = end - begin;
    for (long long i = n - 1; i > 0; i--) std::iter_swap(begin + i, begin + rnd.next(i + 1));
}

static std::vector<std::string> __testlib_argv;
static std::map<std::string, std::string> __testlib_opts;

static void __testlib_parse_args(int argc, char *argv[]) {
    __testlib_argv.assign(argv, argv + argc);
    for (int i = 1; i < argc; i++) {
        std::string a = argv[i];
        if (a.size() < 2 || a[0] != '-' || std::isdigit((unsigned char)a[1])) continue;
        std::string key = a.substr(1);
        size_t eq = key.find('=');
        if (eq != std::string::npos) {
            __testlib_opts[key.substr(0, eq)] = key.substr(eq + 1);
        } else if (i + 1 < argc) {
            __testlib_opts[key] = argv[i + 1];
        } else {
            __testlib_opts[key] = "";
        }
    }
}

static void registerGen(int argc, char *argv[], int = 1) {
    __testlib_parse_args(argc, argv);
    uint64_t h = 0xCBF29CE484222325ULL;
    for (int i = 1; i < argc; i++) {
        for (const char *p = argv[i]; *p; p++) h = (h ^ (unsigned char)*p) * 0x100000001B3ULL;
        h = (h ^ 0x20) * 0x100000001B3ULL;
    }
    rnd.setSeed(h);
}

static bool has_opt(const std::string &key) { return __testlib_opts.count(key) > 0; }

template <typename T>
static T __testlib_convert(const std::string &s, const std::string &what) {
    std::istringstream in(s);
    T v;
    if (!(in >> v)) quitf(_fail, "cannot parse option %s from '%s'", what.c_str(), s.c_str());
    return v;
}

template <>
std::string __testlib_convert<std::string>(const std::string &s, const std::string &) { return s; }

template <typename T>
static T opt(const std::string &key) {
    auto it = __testlib_opts.find(key);
    if (it == __testlib_opts.end()) quitf(_fail, "option %s not given", key.c_str());
    return __testlib_convert<T>(it->second, key);
}

template <typename T>
static T opt(int index) {
    if (index < 0 || index >= int(__testlib_argv.size())) quitf(_fail, "argument %d not given", index);
    return __testlib_convert<T>(__testlib_argv[index], std::to_string(index));
}

template <typename T>
static T opt(const std::string &key, const T &fallback) {
    return has_opt(key) ? opt<T>(key) : fallback;
}

// Input stream with strict (validator) and lenient (checker) modes.
class InStream {
    std::string data;
    size_t pos = 0;
    bool strict = true;
    TResult onError = _fail;

    [[noreturn]] void fail(const std::string &msg) {
        quit(onError, msg + format(" (at byte %zu)", pos));
    }

    void skipBlanks() {
        if (strict) return;
        while (pos < data.size() && std::isspace((unsigned char)data[pos])) pos++;
    }

public:
    void init(std::FILE *f, bool strictMode, TResult errorResult) {
        data.clear();
        char buf[1 << 16];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) data.append(buf, n);
        pos = 0;
        strict = strictMode;
        onError = errorResult;
    }

    void init(const char *path, bool strictMode, TResult errorResult) {
        std::FILE *f = std::fopen(path, "rb");
        if (!f) quitf(_fail, "cannot open %s", path);
        init(f, strictMode, errorResult);
        std::fclose(f);
    }

    bool eof() { return pos >= data.size(); }

    bool seekEof() {
        while (pos < data.size() && std::isspace((unsigned char)data[pos])) pos++;
        return eof();
    }

    char readChar() {
        if (eof()) fail("unexpected end of file");
        return data[pos++];
    }

    void readChar(char c) {
        char got = eof() ? '\0' : data[pos];
        if (eof() || got != c) fail(format("expected character %d, found %d", int(c), int(got)));
        pos++;
    }

    void readSpace() { readChar(' '); }

    void readEoln() {
        if (!strict) return;
        readChar('\n');
    }

    void readEof() {
        if (!strict) skipBlanks();
        if (!eof()) fail("expected end of file");
    }

    std::string readToken() {
        skipBlanks();
        size_t start = pos;
        while (pos < data.size() && !std::isspace((unsigned char)data[pos])) pos++;
        if (start == pos) fail("expected a token");
        return data.substr(start, pos - start);
    }

    std::string readWord() { return readToken(); }

    std::string readLine() {
        size_t start = pos;
        while (pos < data.size() && data[pos] != '\n') pos++;
        std::string line = data.substr(start, pos - start);
        if (pos < data.size()) pos++;
        return line;
    }

    std::string readString() { return readLine(); }

    long long readLong() {
        std::string t = readToken();
        size_t i = (t[0] == '-') ? 1 : 0;
        if (i == t.size() || t.size() - i > 19) fail("expected an integer, found '" + t + "'");
        if (t[i] == '0' && t.size() - i > 1) fail("leading zeros in '" + t + "'");
        if (t == "-0") fail("negative zero");
        unsigned long long v = 0;
        for (; i < t.size(); i++) {
            if (!std::isdigit((unsigned char)t[i])) fail("expected an integer, found '" + t + "'");
            unsigned long long d = t[i] - '0';
            if (v > (ULLONG_MAX - d) / 10) fail("integer overflow in '" + t + "'");
            v = v * 10 + d;
        }
        bool neg = t[0] == '-';
        if (!neg && v > (unsigned long long)LLONG_MAX) fail("integer overflow in '" + t + "'");
        if (neg && v > (unsigned long long)LLONG_MAX + 1ULL) fail("integer overflow in '" + t + "'");
        return neg ? (long long)(0ULL - v) : (long long)v;
    }

    long long readLong(long long lo, long long hi, const std::string &name = "") {
        long long v = readLong();
        if (v < lo || v > hi)
            fail(format("%s=%lld violates the range [%lld, %lld]", name.empty() ? "value" : name.c_str(), v, lo, hi));
        return v;
    }

    int readInt() {
        long long v = readLong();
        if (v < INT_MIN || v > INT_MAX) fail("value does not fit in int");
        return int(v);
    }

    int readInt(int lo, int hi, const std::string &name = "") { return int(readLong(lo, hi, name)); }

    std::vector<int> readInts(int n, int lo, int hi, const std::string &name = "") {
        std::vector<int> v(n);
        for (int i = 0; i < n; i++) {
            if (i > 0) readSpace();
            v[i] = readInt(lo, hi, name);
        }
        return v;
    }
};

static InStream inf, ouf, ans;

static void registerValidation() {
    inf.init(stdin, true, _fail);
}

static void registerValidation(int argc, char *argv[]) {
    __testlib_parse_args(argc, argv);
    registerValidation();
}

// Checker convention: checker <input> <contestant output> <expected output>.
static void registerTestlibCmd(int argc, char *argv[]) {
    if (argc < 4) quitf(_fail, "usage: %s <input> <output> <answer>", argv[0]);
    __testlib_parse_args(argc, argv);
    inf.init(argv[1], false, _fail);
    ouf.init(argv[2], false, _wa);
    ans.init(argv[3], false, _fail);
}

template <typename T>
static void println(const T &x) { std::cout << x << '\n'; }

template <typename T, typename... Rest>
static void println(const T &x, const Rest &...rest) {
    std::cout << x << ' ';
    println(rest...);
}

#endif
