#include <string>
#include <vector>

#include "uwm/cli.hpp"

int main(int argc, char** argv) {
    return uwm::cli::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
