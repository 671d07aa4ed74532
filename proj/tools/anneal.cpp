#include <iostream>

#include "anneal/cli.hpp"

int main(int argc, char** argv) { return anneal::cli::run(argc, argv, std::cout, std::cerr); }
