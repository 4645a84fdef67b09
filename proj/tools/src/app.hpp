#pragma once

#include <string>
#include <vector>

namespace matchlab::cli {

/// Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

}  // namespace matchlab::cli
