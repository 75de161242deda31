#include <iostream>
#include <string>
#include <vector>

#include "taglab/app.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return taglab::app::run(args, std::cout, std::cerr);
}
