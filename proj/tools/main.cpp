#include <string>
#include <vector>

#include "gssl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gssl::run_cli(args);
}
