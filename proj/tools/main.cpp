#include <iostream>

#include "roep/cli.hpp"

int main(int argc, char** argv) { return roep::cli::run(argc, argv, std::cout, std::cerr); }
