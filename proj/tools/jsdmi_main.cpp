#include <iostream>

#include "jsdmi/cli.hpp"

int main(int argc, char** argv) { return jsdmi::cli_main(argc, argv, std::cout, std::cerr); }
