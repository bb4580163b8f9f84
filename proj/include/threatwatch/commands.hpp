#pragma once

// Subcommand implementations behind the `threatwatch` executable. Each
// returns the process exit code: 0 success, 1 domain/validation error,
// 2 I/O error. "-" as a path means stdin/stdout.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace threatwatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

struct ValidateOptions {
  std::string manifest;
};

struct SplitOptions {
  std::string manifest;
  std::uint64_t seed = 0;
  std::string ratios = "0.70,0.15,0.15";
  std::string out = "-";
};

struct ScoreOptions {
  std::string input;
  std::optional<std::string> config;
  std::string out = "-";
  bool strict = false;
};

struct WatchOptions {
  std::string input;
  std::optional<std::string> config;
  std::string alerts = "-";
  std::optional<std::string> webhook;
  bool strict = false;
};

struct EvalOptions {
  std::string pred;
  std::string labels;
  std::string report = "-";
  std::string format = "table";
  std::string provenance;
};

struct SimulateOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;  // overrides the script's seed
  std::string out = "-";
};

// Human-facing diagnostics and the end-of-run summary go to `err`.
int cmd_validate(const ValidateOptions& opts, std::ostream& err);
int cmd_split(const SplitOptions& opts, std::ostream& err);
int cmd_score(const ScoreOptions& opts, std::ostream& err);
int cmd_watch(const WatchOptions& opts, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& err);

}  // namespace threatwatch::cli
