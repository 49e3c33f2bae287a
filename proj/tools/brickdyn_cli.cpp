#include <cstdio>
int main() { std::puts("brickdyn: not wired yet"); return 1; }
