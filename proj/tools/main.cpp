#include <iostream>
#include <string>
#include <vector>

#include "embedlayout/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return embedlayout::run_cli(args, std::cout, std::cerr);
}
