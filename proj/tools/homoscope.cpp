#include <string>
#include <vector>

#include "homoscope/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return homoscope::run_cli(args);
}
