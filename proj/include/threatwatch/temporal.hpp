#pragma once

// Per-stream alert lifecycle: debounced raise, one-shot escalation, and
// hysteretic clear, all counted in frames.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "threatwatch/fusion.hpp"

namespace threatwatch {

struct TemporalConfig {
  std::uint32_t n_raise = 3;
  std::uint32_t n_clear = 10;

  friend bool operator==(const TemporalConfig&, const TemporalConfig&) = default;
};

std::optional<std::string> check(const TemporalConfig& cfg);

enum class AlertPhase { Idle, Suspected, Active };
enum class AlertKind { Raised, Escalated, Cleared };

std::string_view to_string(AlertPhase p) noexcept;
std::string_view to_string(AlertKind k) noexcept;

// Level >= Grasped is hot; ObjectPresent and None are cold.
constexpr bool is_hot(ThreatLevel level) noexcept {
  return level >= ThreatLevel::Grasped;
}

struct AlertState {
  AlertPhase phase = AlertPhase::Idle;
  std::uint32_t consecutive_hot = 0;
  std::uint32_t consecutive_cold = 0;
  std::optional<std::string> active_alert_id;
  ThreatLevel peak_level = ThreatLevel::None;
  double peak_score = 0.0;
  bool escalated = false;
  std::optional<std::uint64_t> last_frame_id;
  std::uint64_t last_ts_ms = 0;

  friend bool operator==(const AlertState&, const AlertState&) = default;
};

struct AlertEvent {
  std::string stream_id;
  std::string alert_id;  // "<stream_id>:<raise frame_id>"
  AlertKind kind = AlertKind::Raised;
  std::uint64_t frame_id = 0;
  std::uint64_t ts_ms = 0;
  ThreatLevel level = ThreatLevel::None;
  double score = 0.0;

  friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

struct StepResult {
  AlertState state;
  std::optional<AlertEvent> event;
};

// Advances one stream by one assessment. Throws OutOfOrderFrame when
// assessment.frame_id does not exceed the last frame seen; the caller's
// state is untouched in that case.
//
// The raising frame emits Raised; Escalated fires on the first
// OverhandThreat frame after that within the same alert. Cleared carries the
// alert's peak level and score.
StepResult step(const AlertState& state, const ThreatAssessment& assessment,
                const TemporalConfig& cfg);

// End-of-stream closure: Cleared at `ts_ms` if an alert is active.
std::optional<AlertEvent> flush(const AlertState& state, std::string_view stream_id,
                                std::uint64_t ts_ms);

std::string serialize(const AlertEvent& event);
AlertEvent parse_alert_event(std::string_view line, std::size_t line_no = 1);

// One state machine per stream_id. Single-writer.
class AlertTracker {
 public:
  explicit AlertTracker(TemporalConfig cfg = {}) : cfg_(cfg) {}

  // Throws OutOfOrderFrame without touching the stream's state.
  std::optional<AlertEvent> observe(const ThreatAssessment& assessment);

  // Clears every active alert, using each stream's last timestamp. Events
  // come out ordered by stream_id.
  std::vector<AlertEvent> flush_all();

  const AlertState* state(const std::string& stream_id) const;
  const TemporalConfig& config() const noexcept { return cfg_; }

 private:
  TemporalConfig cfg_;
  std::map<std::string, AlertState, std::less<>> streams_;
};

}  // namespace threatwatch
