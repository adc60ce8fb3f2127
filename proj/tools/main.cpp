#include <cstdio>

int main() {
    std::puts("cor: subcommands not wired yet");
    return 0;
}
