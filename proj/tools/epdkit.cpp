#include <iostream>

#include "epdkit/pipeline/cli.hpp"

int main(int argc, char** argv) { return epd::pipeline::run_cli(argc, argv, std::cout, std::cerr); }
