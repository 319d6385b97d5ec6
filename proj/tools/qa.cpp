#include <iostream>

#include "qa/cli.hpp"

int main(int argc, char** argv) { return qa::cli::run(argc, argv, std::cout, std::cerr); }
