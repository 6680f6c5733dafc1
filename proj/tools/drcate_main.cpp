#include <iostream>

#include "drcate/cli.hpp"

int main(int argc, char** argv) { return drcate::cli::run(argc, argv, std::cout, std::cerr); }
