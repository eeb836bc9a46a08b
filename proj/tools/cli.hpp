#pragma once

#include <iosfwd>

namespace cryomap::cli {

/// Runs one subcommand. Returns 0 on success, 1 for usage errors, 2 for
/// input or validation errors and 3 for domain or solver errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cryomap::cli
