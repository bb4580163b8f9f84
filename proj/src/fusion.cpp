#include "threatwatch/fusion.hpp"

#include <algorithm>
#include <array>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "threatwatch/error.hpp"

namespace threatwatch {

std::optional<std::string> check(const FusionConfig& c) {
  const std::array<std::pair<const char*, double>, 6> fields = {{
      {"tau_det", c.tau_det},
      {"delta_assoc", c.delta_assoc},
      {"epsilon_vert", c.epsilon_vert},
      {"tau_pose", c.tau_pose},
      {"delta_wrist", c.delta_wrist},
      {"margin", c.margin},
  }};
  for (const auto& [name, v] : fields) {
    if (!(v >= 0.0 && v <= 1.0))
      return fmt::format("fusion.{}={} outside [0,1]", name, v);
  }
  return std::nullopt;
}

std::string_view to_string(FrameClass c) noexcept {
  switch (c) {
    case FrameClass::Threat: return "threat";
    case FrameClass::NoThreatNoHand: return "no_threat_no_hand";
    case FrameClass::NoThreatHand: return "no_threat_hand";
    case FrameClass::Indeterminate: return "indeterminate";
  }
  return "";
}

FrameClass classify_scores(const ClassScores& s, const FusionConfig& cfg) {
  // Listed in tie-break order: lower threat first, so a stable sort by
  // descending probability keeps the lower-threat class ahead on ties.
  std::array<std::pair<double, FrameClass>, 3> ranked = {{
      {s.no_threat, FrameClass::NoThreatNoHand},
      {s.hand, FrameClass::NoThreatHand},
      {s.threat, FrameClass::Threat},
  }};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (ranked[0].first - ranked[1].first < cfg.margin)
    return FrameClass::Indeterminate;
  return ranked[0].second;
}

bool is_overhand(const BoundingBox& hand, const BoundingBox& knife,
                 const FusionConfig& cfg) {
  const double separation = knife.center().y - hand.center().y;
  return separation >= cfg.epsilon_vert - kGeometryTolerance;
}

double GraspPair::min_conf() const noexcept {
  return std::min(hand.conf, knife.conf);
}

std::vector<GraspPair> associate_hand_knife(
    std::span<const InstanceDetection> detections, const FusionConfig& cfg) {
  std::vector<std::size_t> hands;
  std::vector<std::size_t> knives;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].conf < cfg.tau_det) continue;
    (detections[i].label == DetectionLabel::Hand ? hands : knives).push_back(i);
  }

  std::vector<GraspPair> candidates;
  for (std::size_t h : hands) {
    for (std::size_t k : knives) {
      const auto& hd = detections[h];
      const auto& kd = detections[k];
      const double d = distance(hd.box.center(), kd.box.center());
      if (d > cfg.delta_assoc + kGeometryTolerance) continue;
      candidates.push_back({hd, kd, h, k, d, is_overhand(hd.box, kd.box, cfg)});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const GraspPair& a, const GraspPair& b) {
              return std::tuple(!a.overhand, a.center_distance, a.hand_index,
                                a.knife_index) <
                     std::tuple(!b.overhand, b.center_distance, b.hand_index,
                                b.knife_index);
            });

  std::vector<bool> used(detections.size(), false);
  std::vector<GraspPair> pairs;
  for (auto& c : candidates) {
    if (used[c.hand_index] || used[c.knife_index]) continue;
    used[c.hand_index] = used[c.knife_index] = true;
    pairs.push_back(std::move(c));
  }
  return pairs;
}

std::string_view to_string(PoseEvidence p) noexcept {
  switch (p) {
    case PoseEvidence::WristNearKnife: return "wrist_near_knife";
    case PoseEvidence::WristNoKnife: return "wrist_no_knife";
    case PoseEvidence::NoWrist: return "no_wrist";
  }
  return "";
}

PoseEvidence pose_gate(std::span<const PoseKeypoint> keypoints,
                       std::span<const InstanceDetection> detections,
                       const FusionConfig& cfg) {
  bool any_wrist = false;
  for (const auto& kp : keypoints) {
    if (kp.kind() != KeypointKind::Wrist || kp.conf < cfg.tau_pose) continue;
    any_wrist = true;
    for (const auto& d : detections) {
      if (d.label != DetectionLabel::Knife || d.conf < cfg.tau_det) continue;
      if (distance(kp.position(), d.box.center()) <=
          cfg.delta_wrist + kGeometryTolerance)
        return PoseEvidence::WristNearKnife;
    }
  }
  return any_wrist ? PoseEvidence::WristNoKnife : PoseEvidence::NoWrist;
}

std::string_view to_string(ThreatLevel level) noexcept {
  switch (level) {
    case ThreatLevel::None: return "none";
    case ThreatLevel::ObjectPresent: return "object_present";
    case ThreatLevel::Grasped: return "grasped";
    case ThreatLevel::OverhandThreat: return "overhand_threat";
  }
  return "";
}

std::optional<ThreatLevel> parse_threat_level(std::string_view text) noexcept {
  if (text == "none") return ThreatLevel::None;
  if (text == "object_present") return ThreatLevel::ObjectPresent;
  if (text == "grasped") return ThreatLevel::Grasped;
  if (text == "overhand_threat") return ThreatLevel::OverhandThreat;
  return std::nullopt;
}

ScoreBand score_band(ThreatLevel level) noexcept {
  switch (level) {
    case ThreatLevel::None: return {0.0, 0.0};
    case ThreatLevel::ObjectPresent: return {0.40, 0.50};
    case ThreatLevel::Grasped: return {0.70, 0.80};
    case ThreatLevel::OverhandThreat: return {0.90, 1.00};
  }
  return {0.0, 0.0};
}

namespace {

double banded(ThreatLevel level, double c) {
  const ScoreBand band = score_band(level);
  return std::clamp(band.lo + 0.10 * c, band.lo, band.hi);
}

// Highest min(hand, knife) confidence; the earliest pair wins ties.
const GraspPair* best_pair(const std::vector<GraspPair>& pairs, bool overhand_only) {
  const GraspPair* best = nullptr;
  for (const auto& p : pairs) {
    if (overhand_only && !p.overhand) continue;
    if (!best || p.min_conf() > best->min_conf()) best = &p;
  }
  return best;
}

std::string describe(const GraspPair& p) {
  return fmt::format("pair:hand[{}]+knife[{}]:{}:d={:.4f}", p.hand_index,
                     p.knife_index, p.overhand ? "overhand" : "grasped",
                     p.center_distance);
}

}  // namespace

ThreatAssessment assess_frame(const FrameRecord& record, const FusionConfig& cfg) {
  ThreatAssessment out;
  out.stream_id = record.stream_id;
  out.frame_id = record.frame_id;
  out.ts_ms = record.ts_ms;

  const auto pairs = associate_hand_knife(record.detections, cfg);

  std::optional<double> max_knife_conf;
  std::size_t max_knife_index = 0;
  for (std::size_t i = 0; i < record.detections.size(); ++i) {
    const auto& d = record.detections[i];
    if (d.label != DetectionLabel::Knife || d.conf < cfg.tau_det) continue;
    if (!max_knife_conf || d.conf > *max_knife_conf) {
      max_knife_conf = d.conf;
      max_knife_index = i;
    }
  }

  std::optional<FrameClass> verdict;
  if (record.scores) {
    verdict = classify_scores(*record.scores, cfg);
    out.evidence.push_back(fmt::format("classifier:{}", to_string(*verdict)));
  }

  std::optional<PoseEvidence> pose;
  if (!record.keypoints.empty()) {
    pose = pose_gate(record.keypoints, record.detections, cfg);
    out.evidence.push_back(fmt::format("pose:{}", to_string(*pose)));
  }

  if (const GraspPair* p = best_pair(pairs, /*overhand_only=*/true)) {
    out.level = ThreatLevel::OverhandThreat;
    out.score = banded(out.level, p->min_conf());
    out.evidence.push_back(describe(*p));
  } else if (const GraspPair* p = best_pair(pairs, /*overhand_only=*/false)) {
    out.level = ThreatLevel::Grasped;
    out.score = banded(out.level, p->min_conf());
    out.evidence.push_back(describe(*p));
  } else if (max_knife_conf) {
    out.level = ThreatLevel::ObjectPresent;
    out.score = banded(out.level, *max_knife_conf);
    out.evidence.push_back(
        fmt::format("knife[{}]:conf={:.4f}", max_knife_index, *max_knife_conf));
  } else if (verdict == FrameClass::Threat) {
    out.level = ThreatLevel::ObjectPresent;
    out.score = banded(out.level, record.scores->threat);
  }

  // Fist guard: a wrist with no proximate knife cannot support a grasp.
  // Unreachable while grasps require a qualifying knife; kept for any future
  // classifier-only grasp path.
  if (out.level == ThreatLevel::Grasped && pose == PoseEvidence::WristNoKnife &&
      !max_knife_conf) {
    out.level = ThreatLevel::None;
    out.score = 0.0;
    out.evidence.push_back("guard:fist_suppressed");
  }
  return out;
}

std::string serialize(const ThreatAssessment& a) {
  nlohmann::ordered_json out;
  out["stream_id"] = a.stream_id;
  out["frame_id"] = a.frame_id;
  out["level"] = to_string(a.level);
  out["score"] = a.score;
  out["evidence"] = a.evidence;
  return out.dump();
}

ThreatAssessment parse_threat_assessment(std::string_view line, std::size_t line_no) {
  auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded())
    throw ParseError(ErrorCode::MalformedJson, line_no, "", "not valid JSON");
  auto fail = [line_no](const char* path, const char* why) {
    throw ParseError(ErrorCode::SchemaViolation, line_no, path, why);
  };
  if (!doc.is_object()) fail("", "expected a JSON object");
  ThreatAssessment a;
  try {
    a.stream_id = doc.at("stream_id").get<std::string>();
    a.frame_id = doc.at("frame_id").get<std::uint64_t>();
    a.ts_ms = doc.value("ts_ms", std::uint64_t{0});
    a.score = doc.at("score").get<double>();
    a.evidence = doc.value("evidence", std::vector<std::string>{});
    auto level = parse_threat_level(doc.at("level").get<std::string>());
    if (!level) fail("level", "unknown level");
    a.level = *level;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ErrorCode::SchemaViolation, line_no, "", e.what());
  }
  return a;
}

}  // namespace threatwatch
