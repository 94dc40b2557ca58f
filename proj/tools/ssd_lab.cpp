#include <iostream>
#include <string>
#include <vector>

#include "ssd/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ssd::cli::run(std::move(args), std::cout, std::cerr);
}
