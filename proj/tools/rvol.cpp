#include <iostream>

#include "rvol/cli.hpp"

int main(int argc, char** argv) { return rvol::cli_dispatch(argc, argv, std::cout, std::cerr); }
