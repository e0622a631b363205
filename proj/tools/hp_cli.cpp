#include <iostream>

#include "hp/cli.hpp"

int main(int argc, char** argv) {
  return hp::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
