#include <iostream>
#include <string>
#include <vector>

#include "covadj/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return covadj::cli::run(args, std::cout, std::cerr);
}
