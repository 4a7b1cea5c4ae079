#include <algorithm>
#include <cstdio>
#include <vector>

// For each candidate x (every value present, plus one value that appears
// nowhere), fill the gaps and run Manacher.
static int longest(const std::vector<long long> &s) {
    int n = s.size();
    std::vector<int> d1(n), d2(n);
    int best = 0;
    for (int i = 0, l = 0, r = -1; i < n; i++) {
        int k = (i > r) ? 1 : std::min(d1[l + r - i], r - i + 1);
        while (i - k >= 0 && i + k < n && s[i - k] == s[i + k]) k++;
        d1[i] = k--;
        if (i + k > r) l = i - k, r = i + k;
        best = std::max(best, 2 * d1[i] - 1);
    }
    for (int i = 0, l = 0, r = -1; i < n; i++) {
        int k = (i > r) ? 0 : std::min(d2[l + r - i + 1], r - i + 1);
        while (i - k - 1 >= 0 && i + k < n && s[i - k - 1] == s[i + k]) k++;
        d2[i] = k--;
        if (i + k > r) l = i - k - 1, r = i + k;
        best = std::max(best, 2 * d2[i]);
    }
    return best;
}

int main() {
    int n;
    if (scanf("%d", &n) != 1) return 1;
    std::vector<long long> a(n);
    for (auto &x : a) scanf("%lld", &x);
    std::vector<long long> candidates;
    for (long long x : a)
        if (x > 0) candidates.push_back(x);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(0);
    int best = 0;
    std::vector<long long> filled(n);
    for (long long c : candidates) {
        for (int i = 0; i < n; i++) filled[i] = a[i] == -1 ? c : a[i];
        best = std::max(best, longest(filled));
    }
    printf("%d\n", best);
}
