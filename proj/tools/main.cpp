#include "avm/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return avm::cli::run(argc, argv, std::cout, std::cerr); }
