#include "trendlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return trendlab::cli::run(argc, argv, std::cout, std::cerr); }
