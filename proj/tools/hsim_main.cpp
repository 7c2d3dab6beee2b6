#include <cstdio>
int main() { std::puts("hsim placeholder"); return 0; }
