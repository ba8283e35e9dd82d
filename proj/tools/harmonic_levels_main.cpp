#include <iostream>
#include <string>
#include <vector>

#include "harmonic_levels/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return harmonic_levels::cli::run_cli(args, std::cout, std::cerr);
}
