#include "threatwatch/frame_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "threatwatch/error.hpp"

namespace threatwatch {

using nlohmann::json;

double distance(Point a, Point b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

KeypointKind keypoint_kind(std::string_view name) noexcept {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower.find("wrist") != std::string::npos) return KeypointKind::Wrist;
  if (lower.find("elbow") != std::string::npos) return KeypointKind::Elbow;
  if (lower.find("shoulder") != std::string::npos) return KeypointKind::Shoulder;
  return KeypointKind::Other;
}

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::optional<std::string> check(const BoundingBox& b) {
  if (!in_unit(b.x)) return fmt::format("x={} outside [0,1]", b.x);
  if (!in_unit(b.y)) return fmt::format("y={} outside [0,1]", b.y);
  if (!(b.w > 0.0)) return fmt::format("w={} must be > 0", b.w);
  if (!(b.h > 0.0)) return fmt::format("h={} must be > 0", b.h);
  if (b.x + b.w > 1.0 + kBoxTolerance)
    return fmt::format("x+w={} exceeds 1", b.x + b.w);
  if (b.y + b.h > 1.0 + kBoxTolerance)
    return fmt::format("y+h={} exceeds 1", b.y + b.h);
  return std::nullopt;
}

std::optional<std::string> check(const InstanceDetection& d) {
  if (auto r = check(d.box)) return "box: " + *r;
  if (!in_unit(d.conf)) return fmt::format("conf={} outside [0,1]", d.conf);
  if (d.mask_area) {
    const double a = *d.mask_area;
    if (!(a > 0.0 && a <= 1.0))
      return fmt::format("mask_area={} outside (0,1]", a);
    if (a > d.box.area() + kMaskAreaTolerance)
      return fmt::format("mask_area={} exceeds box area {}", a, d.box.area());
  }
  return std::nullopt;
}

std::optional<std::string> check(const ClassScores& s) {
  if (!in_unit(s.threat)) return fmt::format("threat={} outside [0,1]", s.threat);
  if (!in_unit(s.no_threat))
    return fmt::format("no_threat={} outside [0,1]", s.no_threat);
  if (!in_unit(s.hand)) return fmt::format("hand={} outside [0,1]", s.hand);
  const double sum = s.threat + s.no_threat + s.hand;
  if (std::abs(sum - 1.0) > kScoreSumTolerance)
    return fmt::format("scores sum to {}, expected 1", sum);
  return std::nullopt;
}

std::optional<std::string> check(const PoseKeypoint& k) {
  if (!in_unit(k.x)) return fmt::format("x={} outside [0,1]", k.x);
  if (!in_unit(k.y)) return fmt::format("y={} outside [0,1]", k.y);
  if (!in_unit(k.conf)) return fmt::format("conf={} outside [0,1]", k.conf);
  return std::nullopt;
}

void validate(const FrameRecord& r, std::size_t line) {
  auto fail = [line](std::string path, std::string reason) {
    throw ParseError(ErrorCode::SchemaViolation, line, std::move(path),
                     std::move(reason));
  };
  if (r.stream_id.empty()) fail("stream_id", "must be non-empty");
  if (r.scores) {
    if (auto why = check(*r.scores)) fail("scores", *why);
  }
  for (std::size_t i = 0; i < r.detections.size(); ++i) {
    if (auto why = check(r.detections[i]))
      fail(fmt::format("detections[{}]", i), *why);
  }
  for (std::size_t i = 0; i < r.keypoints.size(); ++i) {
    if (auto why = check(r.keypoints[i]))
      fail(fmt::format("keypoints[{}]", i), *why);
  }
}

std::string_view to_string(DetectionLabel label) noexcept {
  return label == DetectionLabel::Hand ? "hand" : "knife";
}

// ---------------------------------------------------------------------------
// JSON field access with path-qualified errors.

namespace {

class FieldReader {
 public:
  explicit FieldReader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& path,
                         const std::string& reason) const {
    throw ParseError(ErrorCode::SchemaViolation, line_, path, reason);
  }

  const json& require(const json& obj, const char* key,
                      const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing required field");
    return *it;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected number");
    return v.get<double>();
  }

  std::uint64_t uint(const json& v, const std::string& path) const {
    if (!v.is_number_unsigned()) fail(path, "expected unsigned integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected array");
    return v;
  }

  const json& object(const json& v, const std::string& path) const {
    if (!v.is_object()) fail(path, "expected object");
    return v;
  }

 private:
  std::size_t line_;
};

json parse_object(std::string_view line, std::size_t line_no) {
  json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded())
    throw ParseError(ErrorCode::MalformedJson, line_no, "", "not valid JSON");
  if (!doc.is_object())
    throw ParseError(ErrorCode::SchemaViolation, line_no, "",
                     "expected a JSON object");
  return doc;
}

InstanceDetection read_detection(const FieldReader& rd, const json& v,
                                 const std::string& path) {
  rd.object(v, path);
  InstanceDetection d;
  const std::string label = rd.string(rd.require(v, "label", path + ".label"),
                                      path + ".label");
  if (label == "hand") {
    d.label = DetectionLabel::Hand;
  } else if (label == "knife") {
    d.label = DetectionLabel::Knife;
  } else {
    rd.fail(path + ".label", fmt::format("unknown label '{}'", label));
  }
  const json& box = rd.array(rd.require(v, "box", path + ".box"), path + ".box");
  if (box.size() != 4) rd.fail(path + ".box", "expected [x, y, w, h]");
  std::array<double, 4> b{};
  for (std::size_t i = 0; i < 4; ++i)
    b[i] = rd.number(box[i], fmt::format("{}.box[{}]", path, i));
  d.box = {b[0], b[1], b[2], b[3]};
  d.conf = rd.number(rd.require(v, "conf", path + ".conf"), path + ".conf");
  if (auto it = v.find("mask_area"); it != v.end() && !it->is_null())
    d.mask_area = rd.number(*it, path + ".mask_area");
  return d;
}

PoseKeypoint read_keypoint(const FieldReader& rd, const json& v,
                           const std::string& path) {
  rd.object(v, path);
  PoseKeypoint k;
  k.name = rd.string(rd.require(v, "name", path + ".name"), path + ".name");
  k.x = rd.number(rd.require(v, "x", path + ".x"), path + ".x");
  k.y = rd.number(rd.require(v, "y", path + ".y"), path + ".y");
  k.conf = rd.number(rd.require(v, "conf", path + ".conf"), path + ".conf");
  return k;
}

}  // namespace

FrameRecord parse_frame_record(std::string_view line, std::size_t line_no) {
  const json doc = parse_object(line, line_no);
  const FieldReader rd(line_no);

  FrameRecord r;
  r.stream_id = rd.string(rd.require(doc, "stream_id", "stream_id"), "stream_id");
  r.frame_id = rd.uint(rd.require(doc, "frame_id", "frame_id"), "frame_id");
  r.ts_ms = rd.uint(rd.require(doc, "ts_ms", "ts_ms"), "ts_ms");

  if (auto it = doc.find("scores"); it != doc.end() && !it->is_null()) {
    rd.object(*it, "scores");
    ClassScores s;
    s.threat = rd.number(rd.require(*it, "threat", "scores.threat"), "scores.threat");
    s.no_threat = rd.number(rd.require(*it, "no_threat", "scores.no_threat"),
                            "scores.no_threat");
    s.hand = rd.number(rd.require(*it, "hand", "scores.hand"), "scores.hand");
    r.scores = s;
  }
  if (auto it = doc.find("detections"); it != doc.end() && !it->is_null()) {
    rd.array(*it, "detections");
    r.detections.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i)
      r.detections.push_back(
          read_detection(rd, (*it)[i], fmt::format("detections[{}]", i)));
  }
  if (auto it = doc.find("keypoints"); it != doc.end() && !it->is_null()) {
    rd.array(*it, "keypoints");
    r.keypoints.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i)
      r.keypoints.push_back(
          read_keypoint(rd, (*it)[i], fmt::format("keypoints[{}]", i)));
  }

  validate(r, line_no);
  return r;
}

std::string serialize(const FrameRecord& r) {
  nlohmann::ordered_json out;
  out["stream_id"] = r.stream_id;
  out["frame_id"] = r.frame_id;
  out["ts_ms"] = r.ts_ms;
  if (r.scores) {
    out["scores"] = {{"threat", r.scores->threat},
                     {"no_threat", r.scores->no_threat},
                     {"hand", r.scores->hand}};
  }
  auto dets = nlohmann::ordered_json::array();
  for (const auto& d : r.detections) {
    nlohmann::ordered_json j;
    j["label"] = to_string(d.label);
    j["box"] = {d.box.x, d.box.y, d.box.w, d.box.h};
    j["conf"] = d.conf;
    if (d.mask_area) j["mask_area"] = *d.mask_area;
    dets.push_back(std::move(j));
  }
  out["detections"] = std::move(dets);
  auto kps = nlohmann::ordered_json::array();
  for (const auto& k : r.keypoints) {
    kps.push_back({{"name", k.name}, {"x", k.x}, {"y", k.y}, {"conf", k.conf}});
  }
  out["keypoints"] = std::move(kps);
  return out.dump();
}

// ---------------------------------------------------------------------------
// Manifest

std::string_view to_string(ClassLabel label) noexcept {
  switch (label) {
    case ClassLabel::Threat: return "threat";
    case ClassLabel::NoThreat: return "no_threat";
    case ClassLabel::Hand: return "hand";
  }
  return "";
}

std::string_view display_name(ClassLabel label) noexcept {
  switch (label) {
    case ClassLabel::Threat: return "Threat";
    case ClassLabel::NoThreat: return "No Threat";
    case ClassLabel::Hand: return "Hand";
  }
  return "";
}

std::optional<ClassLabel> parse_class_label(std::string_view text) noexcept {
  if (text == "threat") return ClassLabel::Threat;
  if (text == "no_threat") return ClassLabel::NoThreat;
  if (text == "hand") return ClassLabel::Hand;
  return std::nullopt;
}

ManifestEntry parse_manifest_entry(std::string_view line, std::size_t line_no) {
  const json doc = parse_object(line, line_no);
  const FieldReader rd(line_no);
  ManifestEntry e;
  e.sample_id = rd.string(rd.require(doc, "sample_id", "sample_id"), "sample_id");
  const std::string label = rd.string(rd.require(doc, "label", "label"), "label");
  auto parsed = parse_class_label(label);
  if (!parsed) rd.fail("label", fmt::format("unknown label '{}'", label));
  e.label = *parsed;
  return e;
}

std::string serialize(const ManifestEntry& e) {
  nlohmann::ordered_json out;
  out["sample_id"] = e.sample_id;
  out["label"] = to_string(e.label);
  return out.dump();
}

std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entries.push_back(parse_manifest_entry(line, line_no));
  }
  return entries;
}

ManifestStats validate_manifest(std::span<const ManifestEntry> entries) {
  if (entries.empty())
    throw Error(ErrorCode::EmptyManifest, "EmptyManifest: manifest has no entries");

  std::unordered_set<std::string_view> seen;
  seen.reserve(entries.size());
  ManifestStats stats;
  for (const auto& e : entries) {
    if (!seen.insert(e.sample_id).second)
      throw Error(ErrorCode::DuplicateSampleId,
                  fmt::format("DuplicateSampleId: '{}'", e.sample_id),
                  e.sample_id);
    ++stats.per_label[static_cast<std::size_t>(e.label)];
  }
  stats.total = entries.size();
  stats.positive_fraction = static_cast<double>(stats.count(ClassLabel::Threat)) /
                            static_cast<double>(stats.total);
  return stats;
}

std::string to_json(const ManifestStats& s) {
  nlohmann::ordered_json out;
  out["total"] = s.total;
  nlohmann::ordered_json per;
  for (auto c : kAllClasses) per[std::string(to_string(c))] = s.count(c);
  out["per_label"] = std::move(per);
  out["positive_fraction"] = s.positive_fraction;
  out["positive_fraction_rounded"] = fmt::format("{:.4f}", s.positive_fraction);
  out["positive_percent"] = fmt::format("{:.1f}%", 100.0 * s.positive_fraction);
  return out.dump();
}

}  // namespace threatwatch
