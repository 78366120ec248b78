#include <iostream>
#include <string>
#include <vector>

#include "cqeo/runner.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return cqeo::runner::run_cli(args, std::cout, std::cerr);
}
