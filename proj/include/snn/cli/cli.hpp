#pragma once

#include <string>
#include <vector>

namespace snn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one command line ("snn-cli <command> [flags]"). Messages go to
/// stdout/stderr; the return value is the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace snn::cli
