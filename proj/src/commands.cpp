#include "threatwatch/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "threatwatch/backend.hpp"
#include "threatwatch/config.hpp"
#include "threatwatch/error.hpp"
#include "threatwatch/eval.hpp"
#include "threatwatch/frame_model.hpp"
#include "threatwatch/fusion.hpp"
#include "threatwatch/temporal.hpp"
#include "threatwatch/webhook.hpp"

namespace threatwatch::cli {

namespace {

// Owns the stream when it is a file; otherwise borrows stdin/stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-") {
      os_ = &std::cout;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path), path);
    os_ = file_.get();
  }
  std::ostream& operator*() { return *os_; }
  void finish() {
    os_->flush();
    if (!*os_) throw Error(ErrorCode::Io, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") {
      is_ = &std::cin;
      return;
    }
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path), path);
    is_ = file_.get();
  }
  std::istream& operator*() { return *is_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* is_ = nullptr;
};

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return e.is_io() ? kExitIo : kExitDomain;
  } catch (const std::ios_base::failure& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitDomain;
  }
}

void apply_log_level(const PipelineConfig& cfg) {
  spdlog::set_level(spdlog::level::from_str(cfg.log_level));
}

ReplayOptions replay_options(bool strict) {
  ReplayOptions o;
  o.strict = strict;
  o.on_skip = [](const ParseError& e) { spdlog::warn("skipping: {}", e.what()); };
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t skipped_of(const DetectorBackend& b) {
  if (auto* replay = dynamic_cast<const JsonlReplayBackend*>(&b)) return replay->skipped();
  return 0;
}

}  // namespace

int cmd_validate(const ValidateOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    Input in(opts.manifest);
    const auto entries = read_manifest(*in);
    const auto stats = validate_manifest(entries);
    std::cout << to_json(stats) << '\n';
    return kExitOk;
  });
}

int cmd_split(const SplitOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    const SplitRatios ratios = parse_ratios(opts.ratios);
    Input in(opts.manifest);
    const auto entries = read_manifest(*in);
    validate_manifest(entries);
    const auto assignment = make_splits(entries, opts.seed, ratios);
    Output out(opts.out);
    write_splits(*out, assignment);
    out.finish();
    const auto c = assignment.counts();
    fmt::print(err, "split: train={} val={} test={} seed={}\n", c.train, c.val, c.test,
               opts.seed);
    return kExitOk;
  });
}

int cmd_score(const ScoreOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_pipeline_config(opts.config);
    apply_log_level(cfg);
    auto backend = open_backend(opts.input, replay_options(opts.strict));
    Output out(opts.out);

    const auto start = std::chrono::steady_clock::now();
    std::size_t frames = 0;
    std::string line;
    while (auto record = backend->next()) {
      line = serialize(assess_frame(*record, cfg.fusion));
      line += '\n';
      (*out).write(line.data(), static_cast<std::streamsize>(line.size()));
      ++frames;
    }
    out.finish();
    const double elapsed = seconds_since(start);
    fmt::print(err, "score: frames={} skipped={} elapsed_s={:.3f} throughput={:.0f} frames/s\n",
               frames, skipped_of(*backend), elapsed,
               elapsed > 0 ? static_cast<double>(frames) / elapsed : 0.0);
    return kExitOk;
  });
}

int cmd_watch(const WatchOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_pipeline_config(opts.config);
    apply_log_level(cfg);
    auto backend = open_backend(opts.input, replay_options(opts.strict));
    Output out(opts.alerts);

    std::unique_ptr<WebhookNotifier> webhook;
    if (auto url = opts.webhook ? opts.webhook : cfg.webhook_url)
      webhook = std::make_unique<WebhookNotifier>(*url);

    std::size_t raised = 0;
    std::size_t events = 0;
    auto emit = [&](const AlertEvent& e) {
      const auto line = serialize(e);
      *out << line << '\n';
      if (webhook) webhook->post(line);
      if (e.kind == AlertKind::Raised) ++raised;
      ++events;
    };

    const auto start = std::chrono::steady_clock::now();
    AlertTracker tracker(cfg.temporal);
    std::size_t frames = 0;
    std::size_t dropped = 0;
    while (auto record = backend->next()) {
      ++frames;
      try {
        if (auto e = tracker.observe(assess_frame(*record, cfg.fusion))) emit(*e);
      } catch (const OutOfOrderFrame& e) {
        ++dropped;
        spdlog::warn("dropping frame: {}", e.what());
      }
    }
    for (const auto& e : tracker.flush_all()) emit(e);
    out.finish();
    const double elapsed = seconds_since(start);

    std::size_t webhook_failed = 0;
    if (webhook) {
      webhook->drain();
      webhook_failed = webhook->failed();
    }
    fmt::print(err,
               "watch: frames={} alerts_raised={} events={} dropped_out_of_order={} "
               "skipped={} webhook_failed={} elapsed_s={:.3f} throughput={:.0f} frames/s\n",
               frames, raised, events, dropped, skipped_of(*backend), webhook_failed, elapsed,
               elapsed > 0 ? static_cast<double>(frames) / elapsed : 0.0);
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    const auto format = parse_report_format(opts.format);
    if (!format) {
      fmt::print(err, "error: unknown format '{}', expected json or table\n", opts.format);
      return kExitDomain;
    }
    std::vector<Prediction> predictions;
    std::vector<ManifestEntry> labels;
    {
      Input pred(opts.pred);
      predictions = read_predictions(*pred);
    }
    {
      Input lab(opts.labels);
      labels = read_manifest(*lab);
    }
    validate_manifest(labels);
    const auto matrix = confusion_matrix(predictions, labels);
    const auto provenance = opts.provenance.empty()
                                ? fmt::format("predictions={} labels={}", opts.pred, opts.labels)
                                : opts.provenance;
    const auto report = per_class_accuracy(matrix, provenance);
    Output out(opts.report);
    *out << render_report(report, *format);
    out.finish();
    return kExitOk;
  });
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    auto script = load_scenario(opts.scenario);
    if (opts.seed) script.seed = *opts.seed;
    SyntheticBackend backend(std::move(script));
    Output out(opts.out);
    std::size_t frames = 0;
    while (auto r = backend.next()) {
      *out << serialize(*r) << '\n';
      ++frames;
    }
    out.finish();
    fmt::print(err, "simulate: frames={}\n", frames);
    return kExitOk;
  });
}

}  // namespace threatwatch::cli
