#include <iostream>

#include "connsim/cli.hpp"

int main(int argc, char** argv) { return connsim::run_cli(argc, argv, std::cout, std::cerr); }
