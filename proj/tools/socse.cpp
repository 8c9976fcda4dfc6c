#include <iostream>

#include "socse/cli.hpp"

int main(int argc, char** argv) { return socse::run_cli(argc, argv, std::cout, std::cerr); }
