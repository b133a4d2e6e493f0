#pragma once

#include <iosfwd>

namespace tspc::cli {

enum ExitCode : int { kOk = 0, kSolverFailure = 1, kUsage = 2, kMissingData = 3 };

/// Entry point of the `tspc` tool; writes to the given streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tspc::cli
