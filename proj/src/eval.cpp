#include "threatwatch/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "threatwatch/error.hpp"
#include "threatwatch/splitmix.hpp"

namespace threatwatch {

namespace {

constexpr double kRatioSumTolerance = 1e-9;
// Keeps products like 0.29 * 100 = 28.999999999999996 from flooring low.
constexpr double kFloorSlack = 1e-9;

[[noreturn]] void bad_ratios(const std::string& why) {
  throw Error(ErrorCode::BadRatios, "BadRatios: " + why);
}

}  // namespace

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "";
}

void check_ratios(const SplitRatios& r) {
  if (!(r.train > 0.0 && r.val > 0.0 && r.test > 0.0))
    bad_ratios(fmt::format("ratios ({}, {}, {}) must all be positive", r.train,
                           r.val, r.test));
  const double sum = r.train + r.val + r.test;
  if (std::abs(sum - 1.0) > kRatioSumTolerance)
    bad_ratios(fmt::format("ratios sum to {}, expected 1", sum));
}

SplitRatios parse_ratios(std::string_view text) {
  std::array<double, 3> v{};
  std::size_t n = 0;
  while (true) {
    const auto comma = text.find(',');
    const auto token = text.substr(0, comma);
    if (n == 3) bad_ratios(fmt::format("expected three ratios, got '{}'", text));
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v[n]);
    if (ec != std::errc{} || ptr != last || token.empty())
      bad_ratios(fmt::format("'{}' is not a number", token));
    ++n;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (n != 3) bad_ratios("expected three comma-separated ratios");
  SplitRatios r{v[0], v[1], v[2]};
  check_ratios(r);
  return r;
}

SplitCounts split_counts(std::size_t n, const SplitRatios& r) {
  const auto N = static_cast<double>(n);
  SplitCounts c;
  c.train = static_cast<std::size_t>(std::floor(r.train * N + kFloorSlack));
  c.val = static_cast<std::size_t>(std::floor(r.val * N + kFloorSlack));
  c.train = std::min(c.train, n);
  c.val = std::min(c.val, n - c.train);
  c.test = n - c.train - c.val;
  return c;
}

SplitCounts SplitAssignment::counts() const noexcept {
  SplitCounts c;
  for (const auto& [id, split] : entries) {
    switch (split) {
      case Split::Train: ++c.train; break;
      case Split::Val: ++c.val; break;
      case Split::Test: ++c.test; break;
    }
  }
  return c;
}

SplitAssignment make_splits(std::span<const ManifestEntry> manifest,
                            std::uint64_t seed, const SplitRatios& ratios) {
  check_ratios(ratios);
  if (manifest.empty())
    throw Error(ErrorCode::EmptyManifest, "EmptyManifest: manifest has no entries");

  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const auto& e : manifest) ids.push_back(e.sample_id);
  std::sort(ids.begin(), ids.end());

  SplitMix64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(ids[i], ids[j]);
  }

  const SplitCounts c = split_counts(ids.size(), ratios);
  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  out.entries.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Split s = i < c.train ? Split::Train
                    : i < c.train + c.val ? Split::Val
                                          : Split::Test;
    out.entries.emplace_back(std::move(ids[i]), s);
  }
  return out;
}

void write_splits(std::ostream& out, const SplitAssignment& a) {
  for (const auto& [id, split] : a.entries) {
    nlohmann::ordered_json j;
    j["sample_id"] = id;
    j["split"] = to_string(split);
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(PredictedLabel p) noexcept {
  switch (p) {
    case PredictedLabel::Threat: return "threat";
    case PredictedLabel::NoThreat: return "no_threat";
    case PredictedLabel::Hand: return "hand";
    case PredictedLabel::Indeterminate: return "indeterminate";
  }
  return "";
}

std::optional<PredictedLabel> parse_predicted_label(std::string_view t) noexcept {
  if (t == "threat") return PredictedLabel::Threat;
  if (t == "no_threat") return PredictedLabel::NoThreat;
  if (t == "hand") return PredictedLabel::Hand;
  if (t == "indeterminate") return PredictedLabel::Indeterminate;
  return std::nullopt;
}

Prediction parse_prediction(std::string_view line, std::size_t line_no) {
  auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded())
    throw ParseError(ErrorCode::MalformedJson, line_no, "", "not valid JSON");
  auto fail = [line_no](const char* path, std::string why) {
    throw ParseError(ErrorCode::SchemaViolation, line_no, path, std::move(why));
  };
  if (!doc.is_object()) fail("", "expected a JSON object");
  auto id = doc.find("sample_id");
  if (id == doc.end() || !id->is_string()) fail("sample_id", "expected string");
  auto pred = doc.find("predicted");
  if (pred == doc.end() || !pred->is_string()) fail("predicted", "expected string");

  Prediction p;
  p.sample_id = id->get<std::string>();
  const auto text = pred->get<std::string>();
  auto label = parse_predicted_label(text);
  if (!label) fail("predicted", fmt::format("unknown label '{}'", text));
  p.predicted = *label;
  return p;
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_prediction(line, line_no));
  }
  return out;
}

std::uint64_t ConfusionMatrix::row_sum(ClassLabel truth) const noexcept {
  std::uint64_t s = 0;
  for (auto v : counts[static_cast<std::size_t>(truth)]) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(ClassLabel predicted) const noexcept {
  std::uint64_t s = 0;
  for (const auto& row : counts) s += row[static_cast<std::size_t>(predicted)];
  return s;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t s = 0;
  for (const auto& row : counts)
    for (auto v : row) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) s += counts[i][i];
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    for (std::size_t j = 0; j < kNumClasses; ++j) counts[i][j] += o.counts[i][j];
  return *this;
}

ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions,
                                 std::span<const ManifestEntry> labels) {
  struct Slot {
    ClassLabel truth;
    bool predicted = false;
  };
  std::unordered_map<std::string_view, Slot> truth;
  truth.reserve(labels.size());
  for (const auto& e : labels) truth.emplace(e.sample_id, Slot{e.label});

  ConfusionMatrix m;
  for (const auto& p : predictions) {
    auto it = truth.find(p.sample_id);
    if (it == truth.end())
      throw Error(ErrorCode::UnknownSample,
                  fmt::format("UnknownSample: '{}'", p.sample_id), p.sample_id);
    if (it->second.predicted)
      throw Error(ErrorCode::DuplicatePrediction,
                  fmt::format("DuplicatePrediction: '{}'", p.sample_id),
                  p.sample_id);
    it->second.predicted = true;
    ++m.at(it->second.truth, scored_as(p.predicted));
  }
  for (const auto& e : labels) {
    if (!truth.at(e.sample_id).predicted)
      throw Error(ErrorCode::MissingPrediction,
                  fmt::format("MissingPrediction: '{}'", e.sample_id), e.sample_id);
  }
  return m;
}

const ClassResult* EvalReport::find(ClassLabel label) const noexcept {
  for (const auto& c : classes)
    if (c.label == label) return &c;
  return nullptr;
}

EvalReport per_class_accuracy(const ConfusionMatrix& m, std::string provenance) {
  EvalReport r;
  r.matrix = m;
  r.provenance = std::move(provenance);
  for (auto label : kAllClasses) {
    const auto n = m.row_sum(label);
    if (n == 0) continue;
    ClassResult c;
    c.label = label;
    c.samples = n;
    c.accuracy = static_cast<double>(m.at(label, label)) / static_cast<double>(n);
    if (const auto col = m.column_sum(label); col > 0)
      c.precision = static_cast<double>(m.at(label, label)) / static_cast<double>(col);
    r.classes.push_back(c);
  }
  const auto total = m.total();
  r.overall_accuracy =
      total == 0 ? 0.0 : static_cast<double>(m.trace()) / static_cast<double>(total);
  return r;
}

double round2(double v) noexcept { return std::round(v * 100.0) / 100.0; }

std::optional<ReportFormat> parse_report_format(std::string_view text) noexcept {
  if (text == "json") return ReportFormat::Json;
  if (text == "table" || text == "text-table") return ReportFormat::Table;
  return std::nullopt;
}

std::string render_report(const EvalReport& r, ReportFormat format) {
  if (format == ReportFormat::Table) {
    std::string out = "Accuracy per class\n\n";
    out += fmt::format("{:<12}{:<10}{}\n", "CLASS", "ACCURACY", "# SAMPLES");
    for (const auto& c : r.classes) {
      out += fmt::format("{:<12}{:<10.2f}{}\n", display_name(c.label),
                         round2(c.accuracy), c.samples);
    }
    if (!r.provenance.empty()) out += fmt::format("\nsource: {}\n", r.provenance);
    return out;
  }

  nlohmann::ordered_json j;
  j["provenance"] = r.provenance;
  j["total"] = r.matrix.total();
  j["overall_accuracy"] = r.overall_accuracy;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& c : r.classes) {
    nlohmann::ordered_json cj;
    cj["class"] = to_string(c.label);
    cj["samples"] = c.samples;
    cj["accuracy"] = c.accuracy;
    cj["accuracy_display"] = fmt::format("{:.2f}", round2(c.accuracy));
    if (c.precision) cj["precision"] = *c.precision;
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  j["labels"] = {"threat", "no_threat", "hand"};
  j["matrix"] = r.matrix.counts;
  return j.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view text) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded())
    throw ParseError(ErrorCode::MalformedJson, 1, "", "not valid JSON");
  try {
    ConfusionMatrix m;
    m.counts = doc.at("matrix").get<decltype(m.counts)>();
    return per_class_accuracy(m, doc.value("provenance", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ErrorCode::SchemaViolation, 1, "matrix", e.what());
  }
}

}  // namespace threatwatch
