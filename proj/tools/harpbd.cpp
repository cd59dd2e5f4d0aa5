// Command-line entry point (subcommands are wired up in harpbd/runner.hpp).
#include <cstdio>

int main() {
    std::puts("harpbd: CLI under construction");
    return 1;
}
