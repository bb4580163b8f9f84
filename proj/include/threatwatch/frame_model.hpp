#pragma once

// Frame evidence types, the FrameRecord JSONL wire format, and dataset
// manifest validation.
//
// Coordinates are normalized to [0,1] with the origin at the top-left corner
// and y increasing downward. "Above" therefore means a smaller y.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace threatwatch {

inline constexpr double kBoxTolerance = 1e-9;
inline constexpr double kScoreSumTolerance = 1e-6;
inline constexpr double kMaskAreaTolerance = 1e-6;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b) noexcept;

// Corner + size, matching the wire encoding [x, y, w, h].
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point center() const noexcept { return {x + w / 2.0, y + h / 2.0}; }
  double area() const noexcept { return w * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class DetectionLabel { Hand, Knife };

struct InstanceDetection {
  DetectionLabel label = DetectionLabel::Hand;
  BoundingBox box;
  double conf = 0.0;
  std::optional<double> mask_area;  // fraction of the frame

  friend bool operator==(const InstanceDetection&,
                         const InstanceDetection&) = default;
};

// Three-way classifier output: threat / no threat without hand / no threat
// with hand.
struct ClassScores {
  double threat = 0.0;
  double no_threat = 0.0;
  double hand = 0.0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

enum class KeypointKind { Wrist, Elbow, Shoulder, Other };

// Maps a wire name to its kind. Case-insensitive substring match, so
// "wrist", "leftWrist" and "right_wrist" are all wrists.
KeypointKind keypoint_kind(std::string_view name) noexcept;

struct PoseKeypoint {
  std::string name;  // as it appears on the wire
  double x = 0.0;
  double y = 0.0;
  double conf = 0.0;

  KeypointKind kind() const noexcept { return keypoint_kind(name); }
  Point position() const noexcept { return {x, y}; }

  friend bool operator==(const PoseKeypoint&, const PoseKeypoint&) = default;
};

struct FrameRecord {
  std::string stream_id;
  std::uint64_t frame_id = 0;
  std::uint64_t ts_ms = 0;
  std::optional<ClassScores> scores;
  std::vector<InstanceDetection> detections;
  std::vector<PoseKeypoint> keypoints;

  bool evidence_free() const noexcept {
    return !scores && detections.empty() && keypoints.empty();
  }

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Invariant checks. Each returns a human-readable reason on violation.
std::optional<std::string> check(const BoundingBox& box);
std::optional<std::string> check(const InstanceDetection& det);
std::optional<std::string> check(const ClassScores& scores);
std::optional<std::string> check(const PoseKeypoint& kp);

// Throws ParseError(SchemaViolation) naming the first violated field.
void validate(const FrameRecord& record, std::size_t line = 0);

// Parses one JSONL line. Unknown fields are ignored; unknown enum values and
// out-of-range numbers are SchemaViolations. Errors carry `line` and the
// JSON field path.
FrameRecord parse_frame_record(std::string_view line, std::size_t line_no = 1);

// Compact single-line JSON, no trailing newline.
std::string serialize(const FrameRecord& record);

std::string_view to_string(DetectionLabel label) noexcept;

// ---------------------------------------------------------------------------
// Dataset manifest

enum class ClassLabel { Threat = 0, NoThreat = 1, Hand = 2 };
inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::Threat, ClassLabel::NoThreat, ClassLabel::Hand};

std::string_view to_string(ClassLabel label) noexcept;         // "threat"
std::string_view display_name(ClassLabel label) noexcept;      // "Threat"
std::optional<ClassLabel> parse_class_label(std::string_view text) noexcept;

struct ManifestEntry {
  std::string sample_id;
  ClassLabel label = ClassLabel::NoThreat;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct ManifestStats {
  std::size_t total = 0;
  std::array<std::size_t, kNumClasses> per_label{};
  double positive_fraction = 0.0;  // |Threat| / total

  std::size_t count(ClassLabel label) const noexcept {
    return per_label[static_cast<std::size_t>(label)];
  }
};

ManifestEntry parse_manifest_entry(std::string_view line,
                                   std::size_t line_no = 1);
std::string serialize(const ManifestEntry& entry);

// Reads a manifest JSONL stream. Blank lines are skipped.
std::vector<ManifestEntry> read_manifest(std::istream& in);

// Throws EmptyManifest or DuplicateSampleId.
ManifestStats validate_manifest(std::span<const ManifestEntry> entries);

std::string to_json(const ManifestStats& stats);

}  // namespace threatwatch
