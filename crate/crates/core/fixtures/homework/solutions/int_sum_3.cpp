#include <iostream>
#include <numeric>
#include <vector>

int main() {
    int n;
    std::cin >> n;
    std::vector<int> a(n);
    for (auto &x : a) std::cin >> x;
    std::cout << std::accumulate(a.begin(), a.end(), 0) << "\n";
}
