#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace thermo::cli {

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr const char* kSeedEnv = "THERMO_SEED";

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

struct SeedChoice {
  std::uint64_t value = kDefaultSeed;
  std::string source;  // "flag", "env" or "default"
};

/// An explicit flag wins, then THERMO_SEED, then kDefaultSeed.
SeedChoice resolve_seed(std::optional<std::uint64_t> flag);

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// stderr; the return value is the process exit code.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace thermo::cli
