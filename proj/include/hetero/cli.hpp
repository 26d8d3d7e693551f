#pragma once

#include <ostream>

namespace hetero::cli {

/// Entry point of the command-line tool. Output files are written through a
/// temporary and renamed on success; without --output the CSV goes to `out`.
/// Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetero::cli
