#pragma once

#include <iosfwd>

namespace anneal::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kDataError = 3,
  kDivergence = 4,
};

/// Entry point of the `anneal` command line tool. Subcommands:
///   schedule dump, landscape bench, train, compare, cifar inspect.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anneal::cli
