#pragma once

// Command-line front end: plan, generate, rolling, eval-edit and ablate.

#include <iosfwd>
#include <string>

namespace loom {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAborted = 1;
inline constexpr int kExitDegraded = 2;
inline constexpr int kExitUsage = 64;

// Runs one command. Artifacts go to --output-dir; the one-line summary and
// tables go to `out`, help text and errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Directory searched by "--config <name>" when <name> is not a file.
std::string default_config_dir();

}  // namespace loom
