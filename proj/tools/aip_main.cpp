#include <iostream>

#include "aip/pipeline.hpp"

int main(int argc, char** argv) { return aip::pipeline::run_cli(argc, argv, std::cout, std::cerr); }
