#include <bits/stdc++.h>
using namespace std;

int main() {
    ios::sync_with_stdio(false);
    cin.tie(nullptr);
    int n;
    cin >> n;
    unsigned int s = 0;
    for (int i = 0; i < n; i++) {
        unsigned int v;
        cin >> v;
        s += v;
    }
    cout << s << '\n';
}
