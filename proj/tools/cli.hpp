#pragma once

#include <iosfwd>

namespace coadopt::cli {

/// Exit codes: 0 success, 1 domain failure (validation, convergence,
/// property), 2 usage or I/O failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coadopt::cli
