#include <algorithm>
#include <cstdio>
#include <vector>

// Expands around every center, tracking the value forced on the erased cells.
int main() {
    int n;
    if (scanf("%d", &n) != 1) return 1;
    std::vector<long long> a(n);
    for (auto &x : a) scanf("%lld", &x);
    int best = 0;
    for (int center = 0; center < 2 * n - 1; center++) {
        int l = center / 2, r = (center + 1) / 2;
        long long forced = -1;
        while (l >= 0 && r < n) {
            long long x = a[l], y = a[r];
            if (x != -1 && y != -1) {
                if (x != y) break;
            } else if (x != -1 || y != -1) {
                long long need = x != -1 ? x : y;
                if (forced != -1 && forced != need) break;
                forced = need;
            }
            best = std::max(best, r - l + 1);
            l--, r++;
        }
    }
    printf("%d\n", best);
}
