#include <cstdio>

int a[100005];

int main() {
    int n;
    scanf("%d", &n);
    for (int i = 1; i <= n; i++) scanf("%d", &a[i]);
    for (int i = 2; i <= n; i++) a[i] += a[i - 1];
    printf("%d\n", a[n]);
}
