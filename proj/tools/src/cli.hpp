#pragma once

#include <iosfwd>

namespace semgraph::cli {

/// Parses arguments and runs one subcommand. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semgraph::cli
