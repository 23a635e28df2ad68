#include <iostream>
#include <string>
#include <vector>

#include "granular/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return granular::cli::main_entry(args, std::cout, std::cerr);
}
