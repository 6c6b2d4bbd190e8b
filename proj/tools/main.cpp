#include <iostream>

#include "cli_app.hpp"

int main(int argc, char** argv) {
  return pc2depth::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
