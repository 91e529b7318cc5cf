#pragma once

#include <string>
#include <vector>

namespace dualloco {

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 usage error, 2 data error, 3 convergence failure.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace dualloco
