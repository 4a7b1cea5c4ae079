#include <cstdio>

int main() {
    int n;
    scanf("%d", &n);
    int total = 0, x;
    while (n--) {
        scanf("%d", &x);
        total = total + x;
    }
    printf("%d\n", total);
}
