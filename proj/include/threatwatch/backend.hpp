#pragma once

// Sources of FrameRecords: recorded JSONL replay, a deterministic synthetic
// scenario generator, and optional externally compiled model adapters.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "threatwatch/error.hpp"
#include "threatwatch/frame_model.hpp"
#include "threatwatch/splitmix.hpp"

namespace threatwatch {

struct Capabilities {
  bool provides_scores = false;
  bool provides_detections = false;
  bool provides_keypoints = false;

  bool any() const noexcept {
    return provides_scores || provides_detections || provides_keypoints;
  }
  friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;

  virtual Capabilities capabilities() const = 0;

  // Next record, or nullopt at end of stream.
  virtual std::optional<FrameRecord> next() = 0;
};

// ---------------------------------------------------------------------------
// Synthetic scenarios

enum class Scene { Empty, HandOnly, KnifeOnly, KnifeGrasped, KnifeOverhand };

std::string_view to_string(Scene s) noexcept;
std::optional<Scene> parse_scene(std::string_view text) noexcept;

struct ScenarioSegment {
  std::uint32_t duration_frames = 1;
  Scene scene = Scene::Empty;
  double noise = 0.0;  // confidence jitter amplitude, [0, 0.1]
};

struct ScenarioScript {
  std::string stream_id = "synthetic";
  std::uint64_t seed = 0;
  double fps = 30.0;
  bool emit_scores = false;  // attach classifier scores to every frame
  std::vector<ScenarioSegment> segments;
};

// Throws Error(BadScript) on the first violated invariant.
void check(const ScenarioScript& script);

// JSON: {"stream_id"?, "seed"?, "fps"?, "emit_scores"?,
//        "segments": [{"scene", "duration_frames", "noise"?}]}
ScenarioScript parse_scenario(std::string_view json_text);
ScenarioScript load_scenario(const std::string& path);

// Streams frames for a script. Frame ids start at 1; ts_ms follows fps.
//
// Geometry per scene, all boxes normalized:
//   KnifeOverhand: hand center 0.10-0.16 above the knife center, within
//                  0.02 horizontally, so the pair is overhand at default
//                  config with a 2x margin on epsilon_vert.
//   KnifeGrasped:  hand beside the knife (0.05-0.10 across, within 0.02
//                  vertically): associated but never overhand.
//   HandOnly:      a hand with a wrist keypoint and no knife.
//   KnifeOnly:     a knife and nothing else.
//   Empty:         no evidence at all (no scores unless emit_scores).
// Positive detection confidences are 0.95 +- noise/2, so they stay in
// [0.90, 1.0] for any legal noise.
class SyntheticBackend final : public DetectorBackend {
 public:
  explicit SyntheticBackend(ScenarioScript script);

  Capabilities capabilities() const override;
  std::optional<FrameRecord> next() override;

 private:
  ScenarioScript script_;
  SplitMix64 rng_;
  std::size_t segment_ = 0;
  std::uint32_t in_segment_ = 0;
  std::uint64_t frame_index_ = 0;
  // per-segment anchor for the primary object center
  double anchor_x_ = 0.5;
  double anchor_y_ = 0.5;
};

std::vector<FrameRecord> synthesize(const ScenarioScript& script);

// ---------------------------------------------------------------------------
// JSONL replay

struct ReplayOptions {
  bool strict = false;  // abort on the first bad line instead of skipping
  std::function<void(const ParseError&)> on_skip;
};

class JsonlReplayBackend final : public DetectorBackend {
 public:
  // `path` "-" reads stdin. Throws Error(Io) if the file cannot be opened.
  JsonlReplayBackend(const std::string& path, ReplayOptions options = {});
  JsonlReplayBackend(std::unique_ptr<std::istream> in, ReplayOptions options = {});
  ~JsonlReplayBackend() override;

  // Inferred from the evidence keys of the first valid record. A first
  // record with no evidence keys at all leaves every capability set.
  Capabilities capabilities() const override { return caps_; }
  std::optional<FrameRecord> next() override;

  std::size_t skipped() const noexcept { return skipped_; }

 private:
  std::optional<FrameRecord> read_one(bool infer);

  std::unique_ptr<std::istream> owned_;
  std::istream* in_ = nullptr;
  ReplayOptions options_;
  Capabilities caps_;
  std::optional<FrameRecord> pending_;
  std::size_t line_no_ = 0;
  std::size_t skipped_ = 0;
};

// ---------------------------------------------------------------------------
// Backend URIs

using AdapterFactory =
    std::function<std::unique_ptr<DetectorBackend>(std::string_view args)>;

// Makes "extern:<name>[:args]" resolvable. Adapters register at startup.
void register_adapter(std::string name, AdapterFactory factory);

// "synthetic:<script.json>", "jsonl:<path>", "extern:<adapter>[:args]".
// A value with no scheme, including "-", is treated as a jsonl path.
// Throws Error(UnknownScheme) or Error(AdapterUnavailable).
std::unique_ptr<DetectorBackend> open_backend(std::string_view uri,
                                              ReplayOptions options = {});

}  // namespace threatwatch
