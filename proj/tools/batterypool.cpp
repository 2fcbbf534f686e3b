#include "batterypool/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bpool::run_cli(argc, argv, std::cout, std::cerr); }
