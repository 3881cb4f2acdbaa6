#pragma once

#include <string>
#include <vector>

namespace dynwatch::cli {

// Runs the CLI; returns the process exit code (0 ok, 1 usage, 2 data,
// 3 numerical). Errors are printed as single-line JSON on stderr.
int run(const std::vector<std::string>& args);

}  // namespace dynwatch::cli
