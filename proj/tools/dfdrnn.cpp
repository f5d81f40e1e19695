#include <iostream>
#include <string>
#include <vector>

#include "dfdrnn/cli.hpp"

int main(int argc, char** argv) {
  return dfdrnn::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
