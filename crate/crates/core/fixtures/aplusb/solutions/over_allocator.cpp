#include <iostream>
#include <vector>

// Materialises a unary representation of the sum before counting it.
int main() {
    long long a, b;
    std::cin >> a >> b;
    std::vector<char> marks;
    for (long long i = 0; i < a + b; i++) marks.push_back(1);
    std::cout << (long long)marks.size() << "\n";
}
