#include "threatwatch/temporal.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "threatwatch/error.hpp"

namespace threatwatch {

std::optional<std::string> check(const TemporalConfig& c) {
  if (c.n_raise < 1) return "temporal.n_raise must be >= 1";
  if (c.n_clear < 1) return "temporal.n_clear must be >= 1";
  return std::nullopt;
}

std::string_view to_string(AlertPhase p) noexcept {
  switch (p) {
    case AlertPhase::Idle: return "idle";
    case AlertPhase::Suspected: return "suspected";
    case AlertPhase::Active: return "active";
  }
  return "";
}

std::string_view to_string(AlertKind k) noexcept {
  switch (k) {
    case AlertKind::Raised: return "raised";
    case AlertKind::Escalated: return "escalated";
    case AlertKind::Cleared: return "cleared";
  }
  return "";
}

StepResult step(const AlertState& state, const ThreatAssessment& a,
                const TemporalConfig& cfg) {
  if (state.last_frame_id && a.frame_id <= *state.last_frame_id)
    throw OutOfOrderFrame(a.stream_id, a.frame_id, *state.last_frame_id);

  StepResult r{state, std::nullopt};
  AlertState& s = r.state;
  s.last_frame_id = a.frame_id;
  s.last_ts_ms = a.ts_ms;

  auto make_event = [&](AlertKind kind, ThreatLevel level, double score) {
    return AlertEvent{a.stream_id, *s.active_alert_id, kind, a.frame_id,
                      a.ts_ms,     level,              score};
  };

  if (is_hot(a.level)) {
    ++s.consecutive_hot;
    s.consecutive_cold = 0;
    if (s.phase == AlertPhase::Active) {
      const bool first_overhand =
          a.level == ThreatLevel::OverhandThreat && !s.escalated;
      if (a.level > s.peak_level ||
          (a.level == s.peak_level && a.score > s.peak_score)) {
        s.peak_level = a.level;
        s.peak_score = a.score;
      }
      if (first_overhand) {
        s.escalated = true;
        r.event = make_event(AlertKind::Escalated, a.level, a.score);
      }
    } else if (s.consecutive_hot >= cfg.n_raise) {
      s.phase = AlertPhase::Active;
      s.active_alert_id = fmt::format("{}:{}", a.stream_id, a.frame_id);
      s.peak_level = a.level;
      s.peak_score = a.score;
      s.escalated = false;
      r.event = make_event(AlertKind::Raised, a.level, a.score);
    } else {
      s.phase = AlertPhase::Suspected;
    }
    return r;
  }

  ++s.consecutive_cold;
  s.consecutive_hot = 0;
  if (s.phase == AlertPhase::Active) {
    if (s.consecutive_cold >= cfg.n_clear) {
      r.event = make_event(AlertKind::Cleared, s.peak_level, s.peak_score);
      s.phase = AlertPhase::Idle;
      s.active_alert_id.reset();
      s.peak_level = ThreatLevel::None;
      s.peak_score = 0.0;
      s.escalated = false;
    }
  } else {
    s.phase = AlertPhase::Idle;
  }
  return r;
}

std::optional<AlertEvent> flush(const AlertState& s, std::string_view stream_id,
                                std::uint64_t ts_ms) {
  if (s.phase != AlertPhase::Active || !s.active_alert_id) return std::nullopt;
  return AlertEvent{std::string(stream_id), *s.active_alert_id, AlertKind::Cleared,
                    s.last_frame_id.value_or(0), ts_ms, s.peak_level, s.peak_score};
}

std::string serialize(const AlertEvent& e) {
  nlohmann::ordered_json out;
  out["stream_id"] = e.stream_id;
  out["alert_id"] = e.alert_id;
  out["kind"] = to_string(e.kind);
  out["frame_id"] = e.frame_id;
  out["ts_ms"] = e.ts_ms;
  out["level"] = to_string(e.level);
  out["score"] = e.score;
  return out.dump();
}

AlertEvent parse_alert_event(std::string_view line, std::size_t line_no) {
  auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded())
    throw ParseError(ErrorCode::MalformedJson, line_no, "", "not valid JSON");
  AlertEvent e;
  try {
    e.stream_id = doc.at("stream_id").get<std::string>();
    e.alert_id = doc.at("alert_id").get<std::string>();
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "raised") {
      e.kind = AlertKind::Raised;
    } else if (kind == "escalated") {
      e.kind = AlertKind::Escalated;
    } else if (kind == "cleared") {
      e.kind = AlertKind::Cleared;
    } else {
      throw ParseError(ErrorCode::SchemaViolation, line_no, "kind", "unknown kind");
    }
    e.frame_id = doc.at("frame_id").get<std::uint64_t>();
    e.ts_ms = doc.at("ts_ms").get<std::uint64_t>();
    auto level = parse_threat_level(doc.at("level").get<std::string>());
    if (!level)
      throw ParseError(ErrorCode::SchemaViolation, line_no, "level", "unknown level");
    e.level = *level;
    e.score = doc.at("score").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(ErrorCode::SchemaViolation, line_no, "", ex.what());
  }
  return e;
}

std::optional<AlertEvent> AlertTracker::observe(const ThreatAssessment& a) {
  auto it = streams_.find(a.stream_id);
  if (it == streams_.end()) it = streams_.emplace(a.stream_id, AlertState{}).first;
  auto result = step(it->second, a, cfg_);
  it->second = std::move(result.state);
  return std::move(result.event);
}

std::vector<AlertEvent> AlertTracker::flush_all() {
  std::vector<AlertEvent> events;
  for (auto& [id, s] : streams_) {
    if (auto e = flush(s, id, s.last_ts_ms)) {
      events.push_back(std::move(*e));
      AlertState reset;
      reset.last_frame_id = s.last_frame_id;
      reset.last_ts_ms = s.last_ts_ms;
      s = reset;
    }
  }
  return events;
}

const AlertState* AlertTracker::state(const std::string& stream_id) const {
  auto it = streams_.find(stream_id);
  return it == streams_.end() ? nullptr : &it->second;
}

}  // namespace threatwatch
