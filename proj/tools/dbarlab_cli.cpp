#include "dbarlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dbarlab::run_cli(argc, argv, std::cout, std::cerr); }
