#include <iostream>

#include "socgen/cli.hpp"

int main(int argc, char** argv) { return socgen::run_cli(argc, argv, std::cout, std::cerr); }
