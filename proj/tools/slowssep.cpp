#include <iostream>

#include "slowssep/cli.hpp"

int main(int argc, char** argv) { return slowssep::cli_main(argc, argv, std::cout, std::cerr); }
