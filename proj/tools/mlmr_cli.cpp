#include <string>
#include <vector>

#include "mlmr/cli.hpp"

int main(int argc, char** argv) {
    return mlmr::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
