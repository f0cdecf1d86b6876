#include <iostream>
#include <string>
#include <vector>

#include "hsa/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hsa::cli::run(std::move(args), std::cout, std::cerr);
}
