#include "threatwatch/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "threatwatch/error.hpp"

namespace threatwatch {

namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& why) {
  throw Error(ErrorCode::BadConfig, "BadConfig: " + why);
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) bad_config(fmt::format("unknown key '{}{}'", where, key));
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    bad_config(fmt::format("'{}{}' has the wrong type", where, key));
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text) {
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) bad_config("not valid JSON");
  if (!doc.is_object()) bad_config("expected a JSON object");
  reject_unknown(doc, {"fusion", "temporal", "webhook_url", "log_level"}, "");

  PipelineConfig cfg;
  if (auto it = doc.find("fusion"); it != doc.end()) {
    if (!it->is_object()) bad_config("'fusion' must be an object");
    reject_unknown(*it, {"tau_det", "delta_assoc", "epsilon_vert", "tau_pose",
                         "delta_wrist", "margin"},
                   "fusion.");
    auto& f = cfg.fusion;
    read_field(*it, "tau_det", f.tau_det, "fusion.");
    read_field(*it, "delta_assoc", f.delta_assoc, "fusion.");
    read_field(*it, "epsilon_vert", f.epsilon_vert, "fusion.");
    read_field(*it, "tau_pose", f.tau_pose, "fusion.");
    read_field(*it, "delta_wrist", f.delta_wrist, "fusion.");
    read_field(*it, "margin", f.margin, "fusion.");
  }
  if (auto it = doc.find("temporal"); it != doc.end()) {
    if (!it->is_object()) bad_config("'temporal' must be an object");
    reject_unknown(*it, {"n_raise", "n_clear"}, "temporal.");
    std::int64_t n_raise = cfg.temporal.n_raise;
    std::int64_t n_clear = cfg.temporal.n_clear;
    read_field(*it, "n_raise", n_raise, "temporal.");
    read_field(*it, "n_clear", n_clear, "temporal.");
    if (n_raise < 1 || n_clear < 1) bad_config("temporal counts must be >= 1");
    cfg.temporal.n_raise = static_cast<std::uint32_t>(n_raise);
    cfg.temporal.n_clear = static_cast<std::uint32_t>(n_clear);
  }
  if (auto it = doc.find("webhook_url"); it != doc.end() && !it->is_null()) {
    std::string url;
    read_field(doc, "webhook_url", url, "");
    cfg.webhook_url = url;
  }
  read_field(doc, "log_level", cfg.log_level, "");

  if (auto why = check(cfg.fusion)) bad_config(*why);
  if (auto why = check(cfg.temporal)) bad_config(*why);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::optional<std::string>& path) {
  std::string chosen;
  if (path && !path->empty()) {
    chosen = *path;
  } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    chosen = env;
  } else {
    return {};
  }
  std::ifstream in(chosen);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot read config '{}'", chosen), chosen);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pipeline_config(buf.str());
}

std::string to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["fusion"] = {{"tau_det", cfg.fusion.tau_det},
                 {"delta_assoc", cfg.fusion.delta_assoc},
                 {"epsilon_vert", cfg.fusion.epsilon_vert},
                 {"tau_pose", cfg.fusion.tau_pose},
                 {"delta_wrist", cfg.fusion.delta_wrist},
                 {"margin", cfg.fusion.margin}};
  j["temporal"] = {{"n_raise", cfg.temporal.n_raise}, {"n_clear", cfg.temporal.n_clear}};
  if (cfg.webhook_url) j["webhook_url"] = *cfg.webhook_url;
  j["log_level"] = cfg.log_level;
  return j.dump(2);
}

}  // namespace threatwatch
