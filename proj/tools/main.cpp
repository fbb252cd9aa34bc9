#include <iostream>

#include "storyloom/cli.hpp"

int main(int argc, char** argv) { return loom::run_cli(argc, argv, std::cout, std::cerr); }
