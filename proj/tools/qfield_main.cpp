#include <iostream>

#include "qfield/cli.hpp"

int main(int argc, char** argv) { return qfield::cli::main_entry(argc, argv, std::cout, std::cerr); }
