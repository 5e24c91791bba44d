#include <iostream>
#include <string>
#include <vector>

#include "drdel/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return drdel::cli::run(std::move(args), std::cout, std::cerr);
}
