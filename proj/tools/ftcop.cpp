#include <cstdio>
int main() { std::puts("ftcop: placeholder"); return 0; }
