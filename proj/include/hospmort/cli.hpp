#ifndef HOSPMORT_CLI_HPP
#define HOSPMORT_CLI_HPP

#include <iosfwd>

namespace hospmort {

// Parses the command line and runs one subcommand. Returns 0 on success,
// 1 for user errors, 2 for numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hospmort

#endif  // HOSPMORT_CLI_HPP
