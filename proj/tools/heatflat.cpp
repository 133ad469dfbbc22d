#include <iostream>

#include "heatflat/cli.hpp"

int main(int argc, char** argv) {
    return heatflat::cli::run_cli(argc, argv, std::cout, std::cerr);
}
