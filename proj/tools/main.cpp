#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
    xrf::cli::block_shutdown_signals();
    return xrf::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
