#include <iostream>

#include "anomnet/commands.hpp"

int main(int argc, char** argv) { return anomnet::cli::run(argc, argv, std::cout, std::cerr); }
