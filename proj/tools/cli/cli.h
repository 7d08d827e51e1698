#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace steel::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // gradient check failed, or an unexpected error
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMalformedInput = 3;
inline constexpr int kExitDuplicateData = 4;
inline constexpr int kExitCorruptCheckpoint = 5;

/// Runs one `steel` invocation. args[0] is the program name. Data and
/// metrics go to `out`, diagnostics to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steel::cli
