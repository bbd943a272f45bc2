#include "defuse/cli.hpp"

int main(int argc, char** argv) {
  return defuse::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
