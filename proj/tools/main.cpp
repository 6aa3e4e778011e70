#include <iostream>
#include <string>
#include <vector>

#include "branchou/cli.hpp"

int main(int argc, char** argv) {
  return branchou::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
