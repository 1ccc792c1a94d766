#ifndef BANDSVD_CLI_HPP
#define BANDSVD_CLI_HPP

#include <ostream>

namespace bandsvd {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitNumeric = 3 };

/// Entry point of the bandsvd command line tool. Diagnostics go to `err`,
/// results to `out` unless --output names a file.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bandsvd

#endif  // BANDSVD_CLI_HPP
