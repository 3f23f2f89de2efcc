#include <iostream>

#include "lmpe/cli.hpp"

int main(int argc, char** argv) {
  return lmpe::cli::run(argc, argv, std::cout, std::cerr);
}
