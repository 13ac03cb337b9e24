#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mmx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Runs one subcommand: simulate, explain, counterfactual, converge, eval-map,
// play or serve. args[0] is the program name. Artifacts go to --out (or
// `out`); diagnostics and usage text go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmx::cli
