#include <iostream>

#include "bvc/cli.hpp"

int main(int argc, char** argv) {
  return bvc::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
