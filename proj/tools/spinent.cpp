#include <iostream>

#include "spinent/cli.hpp"

int main(int argc, char** argv) {
  return spinent::cli::run_cli(argc, argv, std::cout, std::cerr);
}
