#include <string>
#include <vector>

#include "priorlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return priorlab::cli::run_cli(args);
}
