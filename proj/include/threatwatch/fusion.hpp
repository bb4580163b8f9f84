#pragma once

// Per-frame evidence fusion. Everything here is a pure function of its
// inputs; frames may be assessed concurrently in any order.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "threatwatch/frame_model.hpp"

namespace threatwatch {

// Distance and separation thresholds are inclusive up to this slack so that
// values sitting exactly on a threshold do not flip with float rounding.
inline constexpr double kGeometryTolerance = 1e-9;

struct FusionConfig {
  double tau_det = 0.90;      // detection confidence floor
  double delta_assoc = 0.25;  // max hand/knife center distance for a pair
  double epsilon_vert = 0.05; // min vertical center separation for overhand
  double tau_pose = 0.50;     // keypoint confidence floor
  double delta_wrist = 0.20;  // max wrist to knife-center distance
  double margin = 0.10;       // classifier top-two margin

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

std::optional<std::string> check(const FusionConfig& cfg);

enum class FrameClass { Threat, NoThreatNoHand, NoThreatHand, Indeterminate };

std::string_view to_string(FrameClass c) noexcept;

// Argmax over the three scores when the top-two margin reaches cfg.margin,
// otherwise Indeterminate. Exact ties resolve toward the lower-threat class
// (NoThreatNoHand, then NoThreatHand, then Threat).
FrameClass classify_scores(const ClassScores& scores, const FusionConfig& cfg);

// True iff the knife center lies at least cfg.epsilon_vert below the hand
// center. Horizontal offset is not considered.
bool is_overhand(const BoundingBox& hand, const BoundingBox& knife,
                 const FusionConfig& cfg);

struct GraspPair {
  InstanceDetection hand;
  InstanceDetection knife;
  std::size_t hand_index = 0;   // position in the input detection list
  std::size_t knife_index = 0;
  double center_distance = 0.0;
  bool overhand = false;

  double min_conf() const noexcept;

  friend bool operator==(const GraspPair&, const GraspPair&) = default;
};

// One-to-one greedy matching of qualifying hands to qualifying knives.
//
// Only detections with conf >= tau_det take part. Candidate pairs are those
// with center distance <= delta_assoc. Overhand candidates are matched first,
// then the rest; within each group candidates are taken by ascending
// distance, ties broken by lower hand index and then lower knife index.
// Overhand-first keeps "some overhand pair exists" a monotone function of the
// qualifying detection set.
std::vector<GraspPair> associate_hand_knife(
    std::span<const InstanceDetection> detections, const FusionConfig& cfg);

enum class PoseEvidence { WristNearKnife, WristNoKnife, NoWrist };

std::string_view to_string(PoseEvidence p) noexcept;

PoseEvidence pose_gate(std::span<const PoseKeypoint> keypoints,
                       std::span<const InstanceDetection> detections,
                       const FusionConfig& cfg);

enum class ThreatLevel { None = 0, ObjectPresent = 1, Grasped = 2, OverhandThreat = 3 };

std::string_view to_string(ThreatLevel level) noexcept;
std::optional<ThreatLevel> parse_threat_level(std::string_view text) noexcept;

struct ScoreBand {
  double lo;
  double hi;
};

// None is pinned to 0. Bands are disjoint and ordered by level.
ScoreBand score_band(ThreatLevel level) noexcept;

struct ThreatAssessment {
  std::string stream_id;
  std::uint64_t frame_id = 0;
  std::uint64_t ts_ms = 0;
  ThreatLevel level = ThreatLevel::None;
  double score = 0.0;
  std::vector<std::string> evidence;

  friend bool operator==(const ThreatAssessment&,
                         const ThreatAssessment&) = default;
};

// Detection evidence dominates classifier evidence:
//   overhand pair > any pair > qualifying knife > classifier Threat > none.
ThreatAssessment assess_frame(const FrameRecord& record, const FusionConfig& cfg);

// {stream_id, frame_id, level, score, evidence}; ts_ms is not part of the
// wire format.
std::string serialize(const ThreatAssessment& a);
ThreatAssessment parse_threat_assessment(std::string_view line,
                                         std::size_t line_no = 1);

}  // namespace threatwatch
