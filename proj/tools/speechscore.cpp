#include <iostream>
#include <string>
#include <vector>

#include "speechscore/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return speechscore::cli::run(args, std::cout, std::cerr);
}
