#include <iostream>

#include "emrm/cli.hpp"

int main(int argc, char** argv) { return emrm::run_cli(argc, argv, std::cout, std::cerr); }
