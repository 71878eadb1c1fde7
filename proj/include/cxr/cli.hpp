#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cxr::cli {

/// Runs the `cxr` command line. `args` excludes the program name.
/// Returns the process exit code; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cxr::cli
