#include "cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return ncboltz::cli::run_cli(argc, argv, std::cout, std::cerr); }
