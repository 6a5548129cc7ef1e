#include <iostream>
#include <string>
#include <vector>

#include "ntnkb/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ntnkb::run_cli(args, std::cout, std::cerr);
}
