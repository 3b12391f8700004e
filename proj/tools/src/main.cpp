#include <iostream>
#include <string>
#include <vector>

#include "mbsf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mbsf::cli(args, std::cout, std::cerr);
}
