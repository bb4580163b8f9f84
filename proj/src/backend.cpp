#include "threatwatch/backend.hpp"

#include <cassert>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace threatwatch {

std::string_view to_string(Scene s) noexcept {
  switch (s) {
    case Scene::Empty: return "empty";
    case Scene::HandOnly: return "hand_only";
    case Scene::KnifeOnly: return "knife_only";
    case Scene::KnifeGrasped: return "knife_grasped";
    case Scene::KnifeOverhand: return "knife_overhand";
  }
  return "";
}

std::optional<Scene> parse_scene(std::string_view t) noexcept {
  if (t == "empty") return Scene::Empty;
  if (t == "hand_only") return Scene::HandOnly;
  if (t == "knife_only") return Scene::KnifeOnly;
  if (t == "knife_grasped") return Scene::KnifeGrasped;
  if (t == "knife_overhand") return Scene::KnifeOverhand;
  return std::nullopt;
}

namespace {

[[noreturn]] void bad_script(const std::string& why) {
  throw Error(ErrorCode::BadScript, "BadScript: " + why);
}

constexpr double kHandW = 0.10, kHandH = 0.10;
constexpr double kKnifeW = 0.08, kKnifeH = 0.20;
constexpr double kFrameJitter = 0.01;

BoundingBox box_at(double cx, double cy, double w, double h) {
  return {cx - w / 2.0, cy - h / 2.0, w, h};
}

}  // namespace

void check(const ScenarioScript& s) {
  if (s.stream_id.empty()) bad_script("stream_id must be non-empty");
  if (!(s.fps > 0.0)) bad_script("fps must be > 0");
  if (s.segments.empty()) bad_script("segments must be non-empty");
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto& seg = s.segments[i];
    if (seg.duration_frames < 1)
      bad_script(fmt::format("segments[{}].duration_frames must be >= 1", i));
    if (!(seg.noise >= 0.0 && seg.noise <= 0.1))
      bad_script(fmt::format("segments[{}].noise={} outside [0, 0.1]", i, seg.noise));
  }
}

ScenarioScript parse_scenario(std::string_view text) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) bad_script("not valid JSON");
  if (!doc.is_object()) bad_script("expected a JSON object");
  ScenarioScript s;
  try {
    s.stream_id = doc.value("stream_id", s.stream_id);
    s.seed = doc.value("seed", s.seed);
    s.fps = doc.value("fps", s.fps);
    s.emit_scores = doc.value("emit_scores", s.emit_scores);
    const auto& segs = doc.at("segments");
    if (!segs.is_array()) bad_script("segments must be an array");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& j = segs[i];
      ScenarioSegment seg;
      const auto name = j.at("scene").get<std::string>();
      auto scene = parse_scene(name);
      if (!scene) bad_script(fmt::format("segments[{}]: unknown scene '{}'", i, name));
      seg.scene = *scene;
      const auto frames = j.at("duration_frames").get<std::int64_t>();
      if (frames < 1 || frames > std::numeric_limits<std::uint32_t>::max())
        bad_script(fmt::format("segments[{}].duration_frames must be >= 1", i));
      seg.duration_frames = static_cast<std::uint32_t>(frames);
      seg.noise = j.value("noise", 0.0);
      s.segments.push_back(seg);
    }
  } catch (const nlohmann::json::exception& e) {
    bad_script(e.what());
  }
  check(s);
  return s;
}

ScenarioScript load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open scenario '{}'", path), path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

SyntheticBackend::SyntheticBackend(ScenarioScript script)
    : script_(std::move(script)), rng_(script_.seed) {
  check(script_);
}

Capabilities SyntheticBackend::capabilities() const {
  return {script_.emit_scores, true, true};
}

std::optional<FrameRecord> SyntheticBackend::next() {
  if (segment_ >= script_.segments.size()) return std::nullopt;
  const ScenarioSegment& seg = script_.segments[segment_];
  if (in_segment_ == 0) {
    anchor_x_ = rng_.uniform(0.26, 0.73);
    anchor_y_ = rng_.uniform(0.31, 0.69);
  }

  FrameRecord r;
  r.stream_id = script_.stream_id;
  r.frame_id = frame_index_ + 1;
  r.ts_ms = static_cast<std::uint64_t>(
      std::llround(static_cast<double>(frame_index_) * 1000.0 / script_.fps));

  const double half = seg.noise / 2.0;
  auto conf = [&](double base) { return base + half * rng_.uniform(-1.0, 1.0); };
  const double cx = anchor_x_ + rng_.uniform(-kFrameJitter, kFrameJitter);
  const double cy = anchor_y_ + rng_.uniform(-kFrameJitter, kFrameJitter);

  auto add_hand = [&](double hx, double hy) {
    r.detections.push_back(
        {DetectionLabel::Hand, box_at(hx, hy, kHandW, kHandH), conf(0.95), std::nullopt});
    r.keypoints.push_back({"wrist", hx, hy, conf(0.90)});
  };
  auto add_knife = [&] {
    r.detections.push_back({DetectionLabel::Knife, box_at(cx, cy, kKnifeW, kKnifeH),
                            conf(0.95), std::nullopt});
  };

  switch (seg.scene) {
    case Scene::Empty:
      break;
    case Scene::HandOnly:
      add_hand(cx, cy);
      break;
    case Scene::KnifeOnly:
      add_knife();
      break;
    case Scene::KnifeGrasped: {
      add_knife();
      const double side = rng_.uniform(0.05, 0.10);
      add_hand(cx + side, cy + rng_.uniform(-0.02, 0.02));
      break;
    }
    case Scene::KnifeOverhand: {
      add_knife();
      const double rise = rng_.uniform(0.10, 0.16);
      add_hand(cx + rng_.uniform(-0.02, 0.02), cy - rise);
      r.keypoints.push_back({"elbow", cx, std::max(0.0, cy - rise - 0.15), conf(0.85)});
      break;
    }
  }

  if (script_.emit_scores) {
    const double top = 0.90 - half * rng_.unit();
    const double second = (1.0 - top) * rng_.uniform(0.3, 0.7);
    const double third = 1.0 - top - second;
    ClassScores s;
    switch (seg.scene) {
      case Scene::Empty: s = {second, top, third}; break;
      case Scene::HandOnly: s = {second, third, top}; break;
      case Scene::KnifeOnly:
      case Scene::KnifeGrasped:
      case Scene::KnifeOverhand: s = {top, second, third}; break;
    }
    r.scores = s;
  }

#ifndef NDEBUG
  validate(r);
  assert(parse_frame_record(serialize(r)) == r);
#endif

  ++frame_index_;
  if (++in_segment_ >= seg.duration_frames) {
    in_segment_ = 0;
    ++segment_;
  }
  return r;
}

std::vector<FrameRecord> synthesize(const ScenarioScript& script) {
  SyntheticBackend backend(script);
  std::vector<FrameRecord> out;
  while (auto r = backend.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------

JsonlReplayBackend::JsonlReplayBackend(const std::string& path, ReplayOptions options)
    : options_(std::move(options)) {
  if (path == "-") {
    in_ = &std::cin;
  } else {
    auto f = std::make_unique<std::ifstream>(path);
    if (!*f) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path), path);
    owned_ = std::move(f);
    in_ = owned_.get();
  }
  pending_ = read_one(/*infer=*/true);
}

JsonlReplayBackend::JsonlReplayBackend(std::unique_ptr<std::istream> in,
                                       ReplayOptions options)
    : owned_(std::move(in)), in_(owned_.get()), options_(std::move(options)) {
  pending_ = read_one(/*infer=*/true);
}

JsonlReplayBackend::~JsonlReplayBackend() = default;

std::optional<FrameRecord> JsonlReplayBackend::read_one(bool infer) {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      FrameRecord r = parse_frame_record(line, line_no_);
      if (infer) {
        const auto doc = nlohmann::json::parse(line);
        caps_.provides_scores = doc.contains("scores");
        caps_.provides_detections = doc.contains("detections");
        caps_.provides_keypoints = doc.contains("keypoints");
        if (!caps_.any()) caps_ = {true, true, true};
      }
      return r;
    } catch (const ParseError& e) {
      if (options_.strict) throw;
      ++skipped_;
      if (options_.on_skip) options_.on_skip(e);
    }
  }
  if (infer) caps_ = {true, true, true};
  return std::nullopt;
}

std::optional<FrameRecord> JsonlReplayBackend::next() {
  if (pending_) {
    auto r = std::move(pending_);
    pending_.reset();
    return r;
  }
  return read_one(/*infer=*/false);
}

// ---------------------------------------------------------------------------

namespace {

struct AdapterRegistry {
  std::mutex mu;
  std::map<std::string, AdapterFactory, std::less<>> factories;
};

AdapterRegistry& registry() {
  static AdapterRegistry r;
  return r;
}

}  // namespace

void register_adapter(std::string name, AdapterFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[std::move(name)] = std::move(factory);
}

std::unique_ptr<DetectorBackend> open_backend(std::string_view uri,
                                              ReplayOptions options) {
  const auto colon = uri.find(':');
  if (colon == std::string_view::npos)
    return std::make_unique<JsonlReplayBackend>(std::string(uri), std::move(options));

  const auto scheme = uri.substr(0, colon);
  const auto rest = std::string(uri.substr(colon + 1));
  if (scheme == "jsonl")
    return std::make_unique<JsonlReplayBackend>(rest, std::move(options));
  if (scheme == "synthetic")
    return std::make_unique<SyntheticBackend>(load_scenario(rest));
  if (scheme == "extern") {
    const auto sep = rest.find(':');
    const auto name = rest.substr(0, sep);
    const auto args = sep == std::string::npos ? std::string{} : rest.substr(sep + 1);
    AdapterFactory factory;
    {
      auto& r = registry();
      std::lock_guard lock(r.mu);
      if (auto it = r.factories.find(name); it != r.factories.end()) factory = it->second;
    }
    if (!factory)
      throw Error(ErrorCode::AdapterUnavailable,
                  fmt::format("AdapterUnavailable: extern adapter '{}' is not built in",
                              name),
                  name);
    auto backend = factory(args);
    if (!backend || !backend->capabilities().any())
      throw Error(ErrorCode::AdapterUnavailable,
                  fmt::format("AdapterUnavailable: adapter '{}' reported no capabilities",
                              name),
                  name);
    return backend;
  }
  throw Error(ErrorCode::UnknownScheme,
              fmt::format("UnknownScheme: '{}' in '{}'", scheme, uri), std::string(scheme));
}

}  // namespace threatwatch
