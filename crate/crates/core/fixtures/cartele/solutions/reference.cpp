#include <algorithm>
#include <cstdio>
#include <vector>

struct Entry {
    char gender, action;
    int t;
};

int main() {
    int c, n;
    if (scanf("%d %d", &c, &n) != 2) return 1;
    std::vector<Entry> log(n);
    for (auto &e : log) {
        int h, m, s;
        scanf(" %c %c %d %d %d", &e.gender, &e.action, &h, &m, &s);
        e.t = h * 3600 + m * 60 + s;
    }
    // initial occupancy: the deficit of the lowest prefix sum
    long long boys = 0, girls = 0, minBoys = 0, minGirls = 0;
    for (auto &e : log) {
        long long &cnt = e.gender == 'b' ? boys : girls;
        cnt += e.action == 'i' ? 1 : -1;
        minBoys = std::min(minBoys, boys);
        minGirls = std::min(minGirls, girls);
    }
    if (c == 1) {
        printf("%lld %lld\n", boys - minBoys, girls - minGirls);
        return 0;
    }
    boys = -minBoys, girls = -minGirls;
    long long occupied = 0, best = 0, run = 0;
    for (int i = 0; i < n;) {
        int j = i;
        while (j < n && log[j].t == log[i].t) {
            long long &cnt = log[j].gender == 'b' ? boys : girls;
            cnt += log[j].action == 'i' ? 1 : -1;
            j++;
        }
        long long span = j < n ? log[j].t - log[i].t : 0;
        if (boys + girls > 0) occupied += span;
        if (boys % 2 == 1) {
            run += span;
        } else {
            run = 0;
        }
        best = std::max(best, run);
        i = j;
    }
    printf("%lld\n", c == 2 ? occupied : best);
}
