#include <cstdio>

int main() {
    unsigned long long a, b;
    if (scanf("%llu %llu", &a, &b) != 2) return 1;
    printf("%llu\n", a + b);
}
