#include <iostream>
#include <string>
#include <vector>

#include "consensus_rhc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return crhc::cli::run(args, std::cout, std::cerr);
}
