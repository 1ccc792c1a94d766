#include <iostream>

#include "bandsvd/cli.hpp"

int main(int argc, char** argv) { return bandsvd::run_cli(argc, argv, std::cout, std::cerr); }
