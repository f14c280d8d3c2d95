#include <iostream>

#include <thistle/cli.hpp>

int main(int argc, char** argv) {
    return thistle::cli::run(argc, argv, std::cout, std::cerr);
}
