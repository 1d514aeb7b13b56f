#include <iostream>
#include <string>
#include <vector>

#include "mechsym/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mechsym::cli::run(args, std::cout, std::cerr);
}
