#include <cstdio>

int main() {
    int n;
    scanf("%d", &n);
    long long sum = 0;
    int x;
    for (int i = 0; i < n; i++) {
        scanf("%d", &x);
        sum += x;
    }
    // result is printed through an int
    printf("%d\n", (int)sum);
}
