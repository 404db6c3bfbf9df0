#include <iostream>

#include "irsnav/cli.hpp"

int main(int argc, char** argv) { return irsnav::cli_main(argc, argv, std::cout, std::cerr); }
