#include <iostream>

#include "kktmg/cli.hpp"

int main(int argc, char** argv) { return kktmg::cli_main(argc, argv, std::cout, std::cerr); }
