#include <string>
#include <vector>

#include "nlvi/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nlvi::cli::run(args);
}
