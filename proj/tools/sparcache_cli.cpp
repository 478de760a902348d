#include <iostream>

int main() {
    std::cout << "sparcache CLI placeholder\n";
    return 0;
}
