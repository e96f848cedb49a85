#include <iostream>

#include "crowdgraph/cli.hpp"

int main(int argc, char** argv) {
  return crowdgraph::run_cli(argc, argv, std::cout, std::cerr);
}
