#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srnn::cli {

// Runs one `srnn <subcommand> ...` invocation. Returns 0 on success, 1 on
// input errors and 2 on numeric errors; errors go to `err` as `error: ...`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace srnn::cli
