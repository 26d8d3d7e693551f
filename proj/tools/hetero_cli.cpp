#include <iostream>

#include "hetero/cli.hpp"

int main(int argc, char** argv) { return hetero::cli::run(argc, argv, std::cout, std::cerr); }
