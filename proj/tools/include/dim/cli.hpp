#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name. Diagnostics go to
/// `err`, summaries to `out`; files are written under --output-dir only.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dim
