#include <iostream>

#include "fakejob/cli.hpp"

int main(int argc, char** argv) { return fakejob::run_cli(argc, argv, std::cout, std::cerr); }
