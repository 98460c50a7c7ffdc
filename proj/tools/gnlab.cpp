#include "gnlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gnlab::run_cli(argc, argv, std::cout, std::cerr); }
