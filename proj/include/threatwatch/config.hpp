#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "threatwatch/fusion.hpp"
#include "threatwatch/temporal.hpp"

namespace threatwatch {

// Every field is optional in the JSON file:
//   {"fusion": {"tau_det": 0.9, ...}, "temporal": {"n_raise": 3, "n_clear": 10},
//    "webhook_url": "http://host:port/path", "log_level": "info"}
struct PipelineConfig {
  FusionConfig fusion;
  TemporalConfig temporal;
  std::optional<std::string> webhook_url;
  std::string log_level = "info";
};

inline constexpr const char* kConfigEnvVar = "THREATWATCH_CONFIG";

// Throws Error(BadConfig) on unknown keys, wrong types or broken invariants.
PipelineConfig parse_pipeline_config(std::string_view json_text);

// Explicit path wins, then $THREATWATCH_CONFIG, then defaults.
// Throws Error(Io) when a named file cannot be read.
PipelineConfig load_pipeline_config(const std::optional<std::string>& path);

std::string to_json(const PipelineConfig& cfg);

}  // namespace threatwatch
