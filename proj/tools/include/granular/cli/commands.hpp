#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace granular::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> threads;  // GRANULAR_THREADS, then 1, when absent
  bool quiet = false;
  bool timing = false;  // record wall-clock times (artifacts are no longer byte-stable)
};

int cmd_models(bool as_json, std::ostream& out);
int cmd_run(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out);
int cmd_sweep_tau(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out);
int cmd_sweep_n(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out);

struct W2Options {
  std::optional<std::size_t> subsample;  // batch size
  std::size_t reps = 20;
  std::uint64_t seed = 0;
};
int cmd_w2(const std::filesystem::path& a, const std::filesystem::path& b, const W2Options& opts, std::ostream& out);

/// Parses argv (without the program name), runs the subcommand and maps
/// exceptions to exit codes: ConfigError and std::invalid_argument -> 2,
/// NumericalError -> 3.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace granular::cli
