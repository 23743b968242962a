#include <iostream>
#include <string>
#include <vector>

#include "chernoff/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return chernoff::cli::run_cli(args, std::cout, std::cerr);
}
