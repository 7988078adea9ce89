#include <iostream>
#include <string>
#include <vector>

#include "plsim_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return plsim::cli::main_entry(args, std::cout, std::cerr);
}
