#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sqlforge::cli {

// Runs the command line (argv[0] is the program name). Returns 0 on
// success, 1 on pipeline errors (reported as JSON on `err`) and 2 on usage
// or configuration errors.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& argv);

}  // namespace sqlforge::cli
