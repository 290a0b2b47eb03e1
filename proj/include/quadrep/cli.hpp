#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace quadrep {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3 };

// Runs one subcommand (fit, eval, convergence, generate, denoise, replay).
// args excludes the program name. Commands given --out-dir write their files
// there together with manifest.json, from which replay regenerates them.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quadrep
