#pragma once

// Dataset splitting and per-class accuracy scoring.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "threatwatch/frame_model.hpp"

namespace threatwatch {

enum class Split { Train, Val, Test };
std::string_view to_string(Split s) noexcept;

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

// Throws BadRatios unless every ratio is positive and they sum to 1 +- 1e-9.
void check_ratios(const SplitRatios& r);

// Parses "a,b,c". Throws BadRatios on malformed text or bad values.
SplitRatios parse_ratios(std::string_view text);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

// |Train| = floor(r_train N), |Val| = floor(r_val N), Test takes the rest.
SplitCounts split_counts(std::size_t n, const SplitRatios& r);

struct SplitAssignment {
  // Shuffled order; the first counts.train are Train, and so on.
  std::vector<std::pair<std::string, Split>> entries;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  SplitCounts counts() const noexcept;
};

// Sorts sample ids lexicographically, Fisher-Yates shuffles them with
// SplitMix64(seed) (j drawn unbiased from [0, i] for i = N-1 down to 1), then
// cuts Train / Val / Test in that order. Throws EmptyManifest or BadRatios.
SplitAssignment make_splits(std::span<const ManifestEntry> manifest,
                            std::uint64_t seed, const SplitRatios& ratios);

// One {"sample_id", "split"} line per entry, shuffled order, LF-terminated.
void write_splits(std::ostream& out, const SplitAssignment& a);

// ---------------------------------------------------------------------------
// Scoring

enum class PredictedLabel { Threat, NoThreat, Hand, Indeterminate };

std::string_view to_string(PredictedLabel p) noexcept;
std::optional<PredictedLabel> parse_predicted_label(std::string_view text) noexcept;

// Indeterminate is scored as NoThreat: the safe class.
constexpr ClassLabel scored_as(PredictedLabel p) noexcept {
  switch (p) {
    case PredictedLabel::Threat: return ClassLabel::Threat;
    case PredictedLabel::Hand: return ClassLabel::Hand;
    case PredictedLabel::NoThreat:
    case PredictedLabel::Indeterminate: return ClassLabel::NoThreat;
  }
  return ClassLabel::NoThreat;
}

struct Prediction {
  std::string sample_id;
  PredictedLabel predicted = PredictedLabel::NoThreat;
};

Prediction parse_prediction(std::string_view line, std::size_t line_no = 1);
std::vector<Prediction> read_predictions(std::istream& in);

// counts[true][predicted] over {Threat, NoThreat, Hand}.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t at(ClassLabel truth, ClassLabel predicted) const noexcept {
    return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
  }
  std::uint64_t& at(ClassLabel truth, ClassLabel predicted) noexcept {
    return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
  }
  std::uint64_t row_sum(ClassLabel truth) const noexcept;
  std::uint64_t column_sum(ClassLabel predicted) const noexcept;
  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;

  // Chunked scoring merges partial matrices.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws UnknownSample, DuplicatePrediction or MissingPrediction naming the
// first offending id.
ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions,
                                 std::span<const ManifestEntry> labels);

struct ClassResult {
  ClassLabel label = ClassLabel::Threat;
  std::uint64_t samples = 0;
  double accuracy = 0.0;              // recall: diagonal / row sum
  std::optional<double> precision;    // absent when never predicted

  friend bool operator==(const ClassResult&, const ClassResult&) = default;
};

struct EvalReport {
  ConfusionMatrix matrix;
  std::vector<ClassResult> classes;  // classes with zero samples are absent
  double overall_accuracy = 0.0;     // trace / total, 0 for an empty matrix
  std::string provenance;            // free text, e.g. which split was scored

  const ClassResult* find(ClassLabel label) const noexcept;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport per_class_accuracy(const ConfusionMatrix& matrix,
                              std::string provenance = {});

// Half-away-from-zero rounding to two decimals, as displayed in tables.
double round2(double v) noexcept;

enum class ReportFormat { Json, Table };

std::optional<ReportFormat> parse_report_format(std::string_view text) noexcept;

// Table: "Accuracy per class" header, then CLASS / ACCURACY / # SAMPLES
// columns with accuracy at two decimals. Json: full precision, including
// the matrix and per-class precision.
std::string render_report(const EvalReport& report, ReportFormat format);

// Inverse of the json rendering.
EvalReport parse_report_json(std::string_view text);

}  // namespace threatwatch
