#include <iostream>

#include "morh2w/cli.hpp"

int main(int argc, char** argv) { return morh2w::run_cli(argc, argv, std::cout, std::cerr); }
