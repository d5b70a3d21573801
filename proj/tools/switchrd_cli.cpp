#include <string>
#include <vector>

#include "switchrd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return switchrd::cli_main(std::move(args));
}
