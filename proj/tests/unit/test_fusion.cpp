#include <doctest.h>

#include <cmath>

#include "fusion_oracle.hpp"
#include "test_support.hpp"
#include "threatwatch/fusion.hpp"

using namespace threatwatch;
using threatwatch::testing::Rng;
using threatwatch::testing::oracle_level;

namespace {

const FusionConfig kDefault{};

InstanceDetection hand(BoundingBox b, double conf) {
  return {DetectionLabel::Hand, b, conf, std::nullopt};
}
InstanceDetection knife(BoundingBox b, double conf) {
  return {DetectionLabel::Knife, b, conf, std::nullopt};
}
BoundingBox centered(double cx, double cy, double w = 0.1, double h = 0.1) {
  return {cx - w / 2, cy - h / 2, w, h};
}

}  // namespace

TEST_CASE("classify_scores examples") {
  CHECK(classify_scores({0.98, 0.01, 0.01}, kDefault) == FrameClass::Threat);
  CHECK(classify_scores({0.34, 0.33, 0.33}, kDefault) == FrameClass::Indeterminate);
  CHECK(classify_scores({0.05, 0.15, 0.80}, kDefault) == FrameClass::NoThreatHand);
  CHECK(classify_scores({0.05, 0.80, 0.15}, kDefault) == FrameClass::NoThreatNoHand);
}

TEST_CASE("exact ties resolve toward the lower-threat class") {
  // A zero top-two margin is Indeterminate under the default 0.10 margin;
  // the tie order is observable once the margin is zero.
  FusionConfig cfg;
  CHECK(classify_scores({0.45, 0.45, 0.10}, cfg) == FrameClass::Indeterminate);
  cfg.margin = 0.0;
  CHECK(classify_scores({0.45, 0.45, 0.10}, cfg) == FrameClass::NoThreatNoHand);
  CHECK(classify_scores({0.45, 0.10, 0.45}, cfg) == FrameClass::NoThreatHand);
  CHECK(classify_scores({0.10, 0.45, 0.45}, cfg) == FrameClass::NoThreatNoHand);
  CHECK(classify_scores({1.0 / 3, 1.0 / 3, 1.0 / 3}, cfg) == FrameClass::NoThreatNoHand);
}

TEST_CASE("property: classifier output survives rescale and renormalize") {
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const auto s = threatwatch::testing::random_scores(rng);
    const double k = rng.uniform(0.1, 10.0);
    const double a = s.threat * k, b = s.no_threat * k, c = s.hand * k;
    const double sum = a + b + c;
    const ClassScores t{a / sum, b / sum, c / sum};
    // skip inputs within rounding distance of the margin
    if (std::fabs(std::fabs(s.threat - s.no_threat) - kDefault.margin) < 1e-9) continue;
    CHECK(classify_scores(s, kDefault) == classify_scores(t, kDefault));
  }
}

TEST_CASE("is_overhand examples") {
  CHECK(is_overhand(centered(0.5, 0.30), centered(0.5, 0.60), kDefault));
  CHECK_FALSE(is_overhand(centered(0.5, 0.40), centered(0.5, 0.40), kDefault));
  CHECK_FALSE(is_overhand(centered(0.5, 0.60), centered(0.5, 0.30), kDefault));
  // horizontal offset is not considered
  CHECK(is_overhand(centered(0.1, 0.30), centered(0.9, 0.60), kDefault));
}

TEST_CASE("associate_hand_knife distance examples") {
  // hand (0.45,0.25) vs knife (0.46,0.55): sqrt(0.01^2 + 0.30^2) = sqrt(0.0901)
  const double far = std::sqrt(0.0901);
  CHECK(far == doctest::Approx(0.30017).epsilon(1e-4));
  std::vector<InstanceDetection> dets = {hand({0.40, 0.20, 0.10, 0.10}, 0.95),
                                         knife({0.42, 0.45, 0.08, 0.20}, 0.93)};
  CHECK(associate_hand_knife(dets, kDefault).empty());

  // hand (0.45,0.35) vs knife (0.46,0.55): sqrt(0.0001 + 0.04) = sqrt(0.0401)
  dets[0].box = {0.40, 0.30, 0.10, 0.10};
  const auto pairs = associate_hand_knife(dets, kDefault);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].center_distance == doctest::Approx(std::sqrt(0.0401)));
  CHECK(pairs[0].center_distance == doctest::Approx(0.2002).epsilon(1e-3));
  CHECK(pairs[0].hand_index == 0);
  CHECK(pairs[0].knife_index == 1);
  CHECK(pairs[0].overhand);  // knife center 0.20 below the hand center
}

TEST_CASE("associate_hand_knife edge cases") {
  CHECK(associate_hand_knife({}, kDefault).empty());
  std::vector<InstanceDetection> dets = {hand(centered(0.5, 0.4), 0.95),
                                         knife(centered(0.5, 0.5), 0.85)};
  CHECK(associate_hand_knife(dets, kDefault).empty());
  dets[1].conf = 0.90;  // the floor itself qualifies
  CHECK(associate_hand_knife(dets, kDefault).size() == 1);
}

TEST_CASE("greedy matching is one-to-one with deterministic tie breaks") {
  // Two hands equidistant from one knife, both level with it: lower hand
  // index wins.
  std::vector<InstanceDetection> dets = {
      knife(centered(0.5, 0.5), 0.95),
      hand(centered(0.4, 0.5), 0.95),
      hand(centered(0.6, 0.5), 0.95),
  };
  auto pairs = associate_hand_knife(dets, kDefault);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].hand_index == 1);
  CHECK(pairs[0].knife_index == 0);

  // Two knives, two hands: nearest pairs first, each detection used once.
  dets = {
      hand(centered(0.20, 0.5), 0.95), knife(centered(0.25, 0.5), 0.95),
      hand(centered(0.70, 0.5), 0.95), knife(centered(0.62, 0.5), 0.95),
  };
  pairs = associate_hand_knife(dets, kDefault);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].hand_index == 0);
  CHECK(pairs[0].knife_index == 1);
  CHECK(pairs[1].hand_index == 2);
  CHECK(pairs[1].knife_index == 3);
}

TEST_CASE("overhand candidates are matched before closer level ones") {
  // Hand A is 0.20 above the knife; hand B sits level and closer. Matching
  // B first would hide the overhand grip.
  std::vector<InstanceDetection> dets = {
      hand(centered(0.50, 0.30), 0.95),
      knife(centered(0.50, 0.50, 0.08, 0.2), 0.95),
      hand(centered(0.58, 0.50), 0.95),
  };
  const auto pairs = associate_hand_knife(dets, kDefault);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].overhand);
  CHECK(pairs[0].hand_index == 0);
  FrameRecord r{"c", 1, 0, std::nullopt, dets, {}};
  CHECK(assess_frame(r, kDefault).level == ThreatLevel::OverhandThreat);
}

TEST_CASE("pose_gate examples") {
  const std::vector<InstanceDetection> dets = {knife(centered(0.55, 0.55), 0.93)};
  // sqrt(0.05^2 + 0.05^2) = 0.0707 <= 0.20
  CHECK(std::hypot(0.05, 0.05) == doctest::Approx(0.0707).epsilon(1e-3));
  CHECK(pose_gate(std::vector<PoseKeypoint>{{"wrist", 0.5, 0.5, 0.9}}, dets, kDefault) ==
        PoseEvidence::WristNearKnife);
  CHECK(pose_gate(std::vector<PoseKeypoint>{{"wrist", 0.5, 0.5, 0.3}}, dets, kDefault) ==
        PoseEvidence::NoWrist);
  CHECK(pose_gate(std::vector<PoseKeypoint>{{"wrist", 0.5, 0.5, 0.9}}, {}, kDefault) ==
        PoseEvidence::WristNoKnife);
  CHECK(pose_gate(std::vector<PoseKeypoint>{{"elbow", 0.5, 0.5, 0.9}}, dets, kDefault) ==
        PoseEvidence::NoWrist);
  // knife below the detection floor does not count
  const std::vector<InstanceDetection> weak = {knife(centered(0.55, 0.55), 0.5)};
  CHECK(pose_gate(std::vector<PoseKeypoint>{{"leftWrist", 0.5, 0.5, 0.9}}, weak, kDefault) ==
        PoseEvidence::WristNoKnife);
}

TEST_CASE("assess_frame examples") {
  SUBCASE("overhand pair at the association boundary") {
    FrameRecord r{"c1", 7, 231, std::nullopt,
                  {hand({0.45, 0.25, 0.10, 0.10}, 0.95), knife({0.45, 0.45, 0.10, 0.20}, 0.93)},
                  {}};
    // centers (0.50,0.30) and (0.50,0.55): distance 0.25, separation 0.25
    const auto a = assess_frame(r, kDefault);
    CHECK(a.level == ThreatLevel::OverhandThreat);
    CHECK(a.score == doctest::Approx(0.90 + 0.10 * 0.93).epsilon(1e-12));
    CHECK(a.score == doctest::Approx(0.993));
    CHECK(a.stream_id == "c1");
    CHECK(a.frame_id == 7);
    CHECK_FALSE(a.evidence.empty());
  }
  SUBCASE("evidence-free record") {
    const auto a = assess_frame(FrameRecord{"c1", 1, 0, {}, {}, {}}, kDefault);
    CHECK(a.level == ThreatLevel::None);
    CHECK(a.score == 0.0);
  }
  SUBCASE("classifier-only escalation") {
    const auto a =
        assess_frame(FrameRecord{"c1", 1, 0, ClassScores{0.98, 0.01, 0.01}, {}, {}}, kDefault);
    CHECK(a.level == ThreatLevel::ObjectPresent);
    CHECK(a.score == doctest::Approx(0.498));
    CHECK(a.evidence == std::vector<std::string>{"classifier:threat"});
  }
  SUBCASE("lone knife is object present") {
    const auto a = assess_frame(
        FrameRecord{"c1", 1, 0, {}, {knife(centered(0.5, 0.5), 0.97)}, {}}, kDefault);
    CHECK(a.level == ThreatLevel::ObjectPresent);
    CHECK(a.score == doctest::Approx(0.497));
  }
  SUBCASE("level grasp") {
    const auto a = assess_frame(FrameRecord{"c1", 1, 0, {},
                                            {hand(centered(0.45, 0.5), 0.96),
                                             knife(centered(0.52, 0.5), 0.92)},
                                            {}},
                                kDefault);
    CHECK(a.level == ThreatLevel::Grasped);
    CHECK(a.score == doctest::Approx(0.792));
  }
  SUBCASE("detections outrank a benign classifier") {
    const auto a = assess_frame(
        FrameRecord{"c1", 1, 0, ClassScores{0.01, 0.98, 0.01}, {knife(centered(0.5, 0.5), 0.95)}, {}},
        kDefault);
    CHECK(a.level == ThreatLevel::ObjectPresent);
  }
}

TEST_CASE("serialized assessment matches the wire format") {
  const auto a =
      assess_frame(FrameRecord{"c1", 3, 99, ClassScores{0.98, 0.01, 0.01}, {}, {}}, kDefault);
  CHECK(serialize(a) ==
        R"({"stream_id":"c1","frame_id":3,"level":"object_present","score":0.498,"evidence":["classifier:threat"]})");
  const auto back = parse_threat_assessment(serialize(a));
  CHECK(back.level == a.level);
  CHECK(back.score == a.score);
  CHECK(back.evidence == a.evidence);
}

TEST_CASE("property: level agrees with the edge oracle, bands hold") {
  Rng rng(99);
  for (int i = 0; i < 3000; ++i) {
    const auto r = threatwatch::testing::random_record(rng);
    const auto a = assess_frame(r, kDefault);
    REQUIRE(a.level == oracle_level(r, kDefault));
    const auto band = score_band(a.level);
    CHECK(a.score >= band.lo);
    CHECK(a.score <= band.hi);
    if (a.level > ThreatLevel::None) CHECK_FALSE(a.evidence.empty());
    CHECK(assess_frame(r, kDefault) == a);
  }
}

TEST_CASE("property: translation leaves level and score unchanged") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    auto r = threatwatch::testing::random_record(rng);
    double min_x = 1, min_y = 1, max_x = 0, max_y = 0;
    for (const auto& d : r.detections) {
      min_x = std::min(min_x, d.box.x);
      min_y = std::min(min_y, d.box.y);
      max_x = std::max(max_x, d.box.x + d.box.w);
      max_y = std::max(max_y, d.box.y + d.box.h);
    }
    for (const auto& k : r.keypoints) {
      min_x = std::min(min_x, k.x);
      min_y = std::min(min_y, k.y);
      max_x = std::max(max_x, k.x);
      max_y = std::max(max_y, k.y);
    }
    const double dx = rng.uniform(-min_x, 1.0 - max_x);
    const double dy = rng.uniform(-min_y, 1.0 - max_y);
    auto moved = r;
    for (auto& d : moved.detections) {
      d.box.x = std::clamp(d.box.x + dx, 0.0, 1.0);
      d.box.y = std::clamp(d.box.y + dy, 0.0, 1.0);
    }
    for (auto& k : moved.keypoints) {
      k.x = std::clamp(k.x + dx, 0.0, 1.0);
      k.y = std::clamp(k.y + dy, 0.0, 1.0);
    }
    const auto a = assess_frame(r, kDefault);
    const auto b = assess_frame(moved, kDefault);
    CHECK(a.level == b.level);
    CHECK(a.score == b.score);
  }
}

TEST_CASE("property: raising confidence never lowers the level") {
  Rng rng(8);
  for (int i = 0; i < 3000; ++i) {
    auto r = threatwatch::testing::random_record(rng);
    if (r.detections.empty()) continue;
    const auto before = assess_frame(r, kDefault).level;
    auto raised = r;
    auto& d = raised.detections[static_cast<std::size_t>(
        rng.integer(0, static_cast<int>(r.detections.size()) - 1))];
    d.conf = rng.uniform(d.conf, 1.0);
    CHECK(assess_frame(raised, kDefault).level >= before);

    auto removed = r;
    removed.detections.erase(removed.detections.begin() +
                             rng.integer(0, static_cast<int>(r.detections.size()) - 1));
    CHECK(assess_frame(removed, kDefault).level <= before);
  }
}
