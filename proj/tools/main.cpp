#include <iostream>
#include <string>
#include <vector>

#include "skillrec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return skillrec::cli::run(args, std::cout, std::cerr);
}
