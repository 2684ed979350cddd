#pragma once

#include <ostream>

namespace augpt {

// Bundled invariant suite behind the `selftest` subcommand. Prints one line
// per check; returns the number of failures.
int run_selftest(std::ostream& out);

}  // namespace augpt
