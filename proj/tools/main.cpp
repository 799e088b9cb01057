#include <iostream>

#include "hospmort/cli.hpp"

int main(int argc, char** argv) { return hospmort::run_cli(argc, argv, std::cout, std::cerr); }
