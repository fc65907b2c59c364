#include <iostream>

#include "rdfload/cli.hpp"

int main(int argc, char** argv) { return rdfload::run_cli(argc, argv, std::cout, std::cerr); }
