#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kpforge::cli {

/// Runs one kpforge invocation. `args` excludes the program name. Returns 0
/// on success, 2 on a usage error and 1 on any other failure; failures also
/// write a single-line JSON error record to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace kpforge::cli
