#include <iostream>

#include "evsi/cli.hpp"

int main(int argc, char** argv) { return evsi::cli::run(argc, argv, std::cout, std::cerr); }
