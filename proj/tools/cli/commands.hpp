#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gatr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Parses the command line and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// Seed used to generate `split` from a base seed; distinct splits never share samples.
std::uint64_t split_seed(std::uint64_t base, const std::string& split);

}  // namespace gatr::cli
