#include <iostream>

int solve(int n) {
    int acc = 0;
    for (int i = 0; i < n; ++i) {
        int v;
        std::cin >> v;
        acc += v;
    }
    return acc;
}

int main() {
    int n;
    std::cin >> n;
    std::cout << solve(n) << std::endl;
}
