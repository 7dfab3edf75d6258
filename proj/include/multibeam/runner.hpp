#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "multibeam/config.hpp"

namespace multibeam {

/// Column names of the CSV written by a subcommand, in order.
std::vector<std::string> csv_columns(std::string_view subcommand);

/// Runs one subcommand. The artifact goes to config.path ('-' for `out`)
/// and a one-line summary to `log`. Returns the process exit status; on
/// failure an error object is written to `out` and 1 is returned.
int run(std::string_view subcommand, const RunConfig& config, std::ostream& out, std::ostream& log);

/// {"error": message, "kind": ..., "field": ..., "line": ...}
std::string error_json(const std::exception& error);

}  // namespace multibeam
