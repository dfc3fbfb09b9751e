#include <iostream>

#include "greenrec/cli.hpp"

int main(int argc, char** argv) { return greenrec::run_cli(argc, argv, std::cout, std::cerr); }
