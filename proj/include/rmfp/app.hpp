#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "rmfp/config.hpp"

namespace rmfp {

inline constexpr int kExitOk = 0;
/// Solver nonconvergence or a failed certificate.
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Command-line values that take precedence over the config file.
struct RunOverrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Loads the config, applies overrides and runs `mode`. Progress goes to
/// `log` unless quiet; errors go to `err`. Returns the process exit code.
int run(RunMode mode, const std::filesystem::path& config_path, const RunOverrides& overrides,
        std::ostream& log, std::ostream& err);

/// As above for an already parsed config.
int run_config(RunMode mode, RunConfig config, const RunOverrides& overrides, std::ostream& log,
               std::ostream& err);

}  // namespace rmfp
