#include <iostream>
#include <string>
#include <vector>

#include "occtrack/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return occtrack::dispatch(args, std::cout, std::cerr);
}
