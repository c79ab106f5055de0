#pragma once

#include <string>
#include <vector>

namespace infoseek::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `infoseek` tool. args[0] is the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

} // namespace infoseek::cli
