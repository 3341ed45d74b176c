#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace specinit::cli {

/// Runs the command line `args` (without the program name).
/// Returns 0 on success, 1 on solver failure and 2 on usage or I/O errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "min:max:count" (log-spaced when `log_spaced`, else linear) or a
/// comma-separated list. Throws ArgumentError on malformed input or
/// min > max.
std::vector<double> parse_grid(const std::string& spec, bool log_spaced);

}  // namespace specinit::cli
