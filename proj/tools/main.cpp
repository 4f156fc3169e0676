#include <string>
#include <vector>

#include "ltrel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ltrel::cli::run(args);
}
