#include <iostream>
#include <string>
#include <vector>

#include "lfm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lfm::cli::run(args, std::cout, std::cerr);
}
