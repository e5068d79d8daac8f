#include <iostream>
#include <string>
#include <vector>

#include "onionlens/service/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return onionlens::service::run_cli(args, std::cout, std::cerr);
}
