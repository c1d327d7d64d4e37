#include <string>
#include <vector>

#include "sqlforge/cli.hpp"

int main(int argc, char** argv) {
  return sqlforge::cli::run(std::vector<std::string>(argv, argv + argc));
}
