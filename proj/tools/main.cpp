#include <iostream>

#include "nntree/cli.hpp"

int main(int argc, char** argv) { return nntree::cli::run(argc, argv, std::cout, std::cerr); }
