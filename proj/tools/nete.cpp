#include <iostream>

#include "nete/cli.hpp"

int main(int argc, char** argv) {
    return nete::cli::run(argc, argv, std::cout, std::cerr);
}
