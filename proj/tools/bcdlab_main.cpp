#include <iostream>
#include <string>
#include <vector>

#include "bcdlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return bcdlab::cli::run(args, std::cout, std::cerr);
}
