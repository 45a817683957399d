#include <iostream>

#include "motifcnn/cli.hpp"

int main(int argc, char** argv) { return motifcnn::run_cli(argc, argv, std::cout, std::cerr); }
