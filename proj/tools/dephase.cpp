#include <iostream>

#include "dephase/cli.hpp"

int main(int argc, char** argv) {
  return dephase::cli::run(argc, argv, std::cout, std::cerr);
}
