#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nsalpha/experiments.hpp"
#include "nsalpha/io.hpp"

namespace nsalpha::cli {

/// Runs `nsalpha <args...>` in-process (args exclude the program name).
/// Returns 0 on success, 2 on usage or configuration errors, 3 on numerical
/// failure (eigensolver, blow-up, failed basis validation).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Effective configuration: file values overridden by flags.
KeyValues merge(KeyValues base, const KeyValues& overrides);

/// Solver settings from the flat configuration (defaults for missing keys).
SolverConfig solver_config(const KeyValues& kv);

/// Basis from `basis` (a file) or from `domain`, `modes`, `grid`; at least
/// `min_modes` modes.
BasisPtr resolve_basis(const KeyValues& kv, std::size_t default_modes, std::size_t min_modes);

/// Output directory `<out>/<command>-<hash>`; `out` and `jobs` do not enter the hash.
std::string output_directory(const std::string& command, const KeyValues& kv);

}  // namespace nsalpha::cli
