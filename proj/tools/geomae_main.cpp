#include <iostream>
#include <string>
#include <vector>

#include "geomae/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return geomae::run_cli(args, std::cout, std::cerr);
}
