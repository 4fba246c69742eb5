#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cvarcut::cli::run(argc, argv, std::cout); }
