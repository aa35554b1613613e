#include <iostream>

#include "dmescope/cli.hpp"

int main(int argc, char** argv) { return dmescope::run_cli(argc, argv, std::cout, std::cerr); }
