#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "threatwatch/backend.hpp"
#include "threatwatch/error.hpp"
#include "threatwatch/eval.hpp"
#include "threatwatch/frame_model.hpp"
#include "threatwatch/fusion.hpp"
#include "threatwatch/temporal.hpp"

namespace py = pybind11;
using namespace threatwatch;

PYBIND11_MODULE(_threatwatch, m) {
  m.doc() = "threatwatch core bindings";
  m.attr("__version__") = "0.1.0";

  static py::exception<Error> error(m, "ThreatwatchError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  // -- frame model --------------------------------------------------------
  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x, double y, double w, double h) {
             return BoundingBox{x, y, w, h};
           }),
           py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
      .def_readwrite("x", &BoundingBox::x)
      .def_readwrite("y", &BoundingBox::y)
      .def_readwrite("w", &BoundingBox::w)
      .def_readwrite("h", &BoundingBox::h)
      .def("center", [](const BoundingBox& b) {
        const auto c = b.center();
        return py::make_tuple(c.x, c.y);
      })
      .def(py::self == py::self);

  py::enum_<DetectionLabel>(m, "DetectionLabel")
      .value("Hand", DetectionLabel::Hand)
      .value("Knife", DetectionLabel::Knife);

  py::class_<InstanceDetection>(m, "InstanceDetection")
      .def(py::init([](DetectionLabel label, BoundingBox box, double conf,
                       std::optional<double> mask_area) {
             return InstanceDetection{label, box, conf, mask_area};
           }),
           py::arg("label"), py::arg("box"), py::arg("conf"),
           py::arg("mask_area") = py::none())
      .def_readwrite("label", &InstanceDetection::label)
      .def_readwrite("box", &InstanceDetection::box)
      .def_readwrite("conf", &InstanceDetection::conf)
      .def_readwrite("mask_area", &InstanceDetection::mask_area)
      .def(py::self == py::self);

  py::class_<ClassScores>(m, "ClassScores")
      .def(py::init([](double t, double n, double h) { return ClassScores{t, n, h}; }),
           py::arg("threat"), py::arg("no_threat"), py::arg("hand"))
      .def_readwrite("threat", &ClassScores::threat)
      .def_readwrite("no_threat", &ClassScores::no_threat)
      .def_readwrite("hand", &ClassScores::hand);

  py::class_<PoseKeypoint>(m, "PoseKeypoint")
      .def(py::init([](std::string name, double x, double y, double conf) {
             return PoseKeypoint{std::move(name), x, y, conf};
           }),
           py::arg("name"), py::arg("x"), py::arg("y"), py::arg("conf"))
      .def_readwrite("name", &PoseKeypoint::name)
      .def_readwrite("x", &PoseKeypoint::x)
      .def_readwrite("y", &PoseKeypoint::y)
      .def_readwrite("conf", &PoseKeypoint::conf);

  py::class_<FrameRecord>(m, "FrameRecord")
      .def(py::init<>())
      .def_readwrite("stream_id", &FrameRecord::stream_id)
      .def_readwrite("frame_id", &FrameRecord::frame_id)
      .def_readwrite("ts_ms", &FrameRecord::ts_ms)
      .def_readwrite("scores", &FrameRecord::scores)
      .def_readwrite("detections", &FrameRecord::detections)
      .def_readwrite("keypoints", &FrameRecord::keypoints)
      .def(py::self == py::self);

  m.def("parse_frame_record", &parse_frame_record, py::arg("line"),
        py::arg("line_no") = 1);
  m.def("serialize_frame_record", py::overload_cast<const FrameRecord&>(&serialize));

  py::enum_<ClassLabel>(m, "ClassLabel")
      .value("Threat", ClassLabel::Threat)
      .value("NoThreat", ClassLabel::NoThreat)
      .value("Hand", ClassLabel::Hand);

  py::class_<ManifestEntry>(m, "ManifestEntry")
      .def(py::init([](std::string id, ClassLabel label) {
             return ManifestEntry{std::move(id), label};
           }),
           py::arg("sample_id"), py::arg("label"))
      .def_readwrite("sample_id", &ManifestEntry::sample_id)
      .def_readwrite("label", &ManifestEntry::label);

  py::class_<ManifestStats>(m, "ManifestStats")
      .def_readonly("total", &ManifestStats::total)
      .def_readonly("positive_fraction", &ManifestStats::positive_fraction)
      .def("count", &ManifestStats::count);

  m.def("validate_manifest", [](const std::vector<ManifestEntry>& entries) {
    return validate_manifest(entries);
  });

  // -- fusion -------------------------------------------------------------
  py::class_<FusionConfig>(m, "FusionConfig")
      .def(py::init<>())
      .def_readwrite("tau_det", &FusionConfig::tau_det)
      .def_readwrite("delta_assoc", &FusionConfig::delta_assoc)
      .def_readwrite("epsilon_vert", &FusionConfig::epsilon_vert)
      .def_readwrite("tau_pose", &FusionConfig::tau_pose)
      .def_readwrite("delta_wrist", &FusionConfig::delta_wrist)
      .def_readwrite("margin", &FusionConfig::margin);

  py::enum_<FrameClass>(m, "FrameClass")
      .value("Threat", FrameClass::Threat)
      .value("NoThreatNoHand", FrameClass::NoThreatNoHand)
      .value("NoThreatHand", FrameClass::NoThreatHand)
      .value("Indeterminate", FrameClass::Indeterminate);

  py::enum_<ThreatLevel>(m, "ThreatLevel")
      .value("None_", ThreatLevel::None)
      .value("ObjectPresent", ThreatLevel::ObjectPresent)
      .value("Grasped", ThreatLevel::Grasped)
      .value("OverhandThreat", ThreatLevel::OverhandThreat);

  py::enum_<PoseEvidence>(m, "PoseEvidence")
      .value("WristNearKnife", PoseEvidence::WristNearKnife)
      .value("WristNoKnife", PoseEvidence::WristNoKnife)
      .value("NoWrist", PoseEvidence::NoWrist);

  py::class_<GraspPair>(m, "GraspPair")
      .def_readonly("hand", &GraspPair::hand)
      .def_readonly("knife", &GraspPair::knife)
      .def_readonly("hand_index", &GraspPair::hand_index)
      .def_readonly("knife_index", &GraspPair::knife_index)
      .def_readonly("center_distance", &GraspPair::center_distance)
      .def_readonly("overhand", &GraspPair::overhand);

  py::class_<ThreatAssessment>(m, "ThreatAssessment")
      .def_readonly("stream_id", &ThreatAssessment::stream_id)
      .def_readonly("frame_id", &ThreatAssessment::frame_id)
      .def_readonly("ts_ms", &ThreatAssessment::ts_ms)
      .def_readonly("level", &ThreatAssessment::level)
      .def_readonly("score", &ThreatAssessment::score)
      .def_readonly("evidence", &ThreatAssessment::evidence)
      .def("to_json", [](const ThreatAssessment& a) { return serialize(a); });

  const FusionConfig defaults;
  m.def("classify_scores", &classify_scores, py::arg("scores"), py::arg("cfg") = defaults);
  m.def("is_overhand", &is_overhand, py::arg("hand"), py::arg("knife"),
        py::arg("cfg") = defaults);
  m.def(
      "associate_hand_knife",
      [](const std::vector<InstanceDetection>& d, const FusionConfig& cfg) {
        return associate_hand_knife(d, cfg);
      },
      py::arg("detections"), py::arg("cfg") = defaults);
  m.def(
      "pose_gate",
      [](const std::vector<PoseKeypoint>& k, const std::vector<InstanceDetection>& d,
         const FusionConfig& cfg) { return pose_gate(k, d, cfg); },
      py::arg("keypoints"), py::arg("detections"), py::arg("cfg") = defaults);
  m.def("assess_frame", &assess_frame, py::arg("record"), py::arg("cfg") = defaults);

  // -- temporal -----------------------------------------------------------
  py::class_<TemporalConfig>(m, "TemporalConfig")
      .def(py::init<>())
      .def_readwrite("n_raise", &TemporalConfig::n_raise)
      .def_readwrite("n_clear", &TemporalConfig::n_clear);

  py::enum_<AlertKind>(m, "AlertKind")
      .value("Raised", AlertKind::Raised)
      .value("Escalated", AlertKind::Escalated)
      .value("Cleared", AlertKind::Cleared);

  py::class_<AlertEvent>(m, "AlertEvent")
      .def_readonly("stream_id", &AlertEvent::stream_id)
      .def_readonly("alert_id", &AlertEvent::alert_id)
      .def_readonly("kind", &AlertEvent::kind)
      .def_readonly("frame_id", &AlertEvent::frame_id)
      .def_readonly("ts_ms", &AlertEvent::ts_ms)
      .def_readonly("level", &AlertEvent::level)
      .def_readonly("score", &AlertEvent::score)
      .def("to_json", [](const AlertEvent& e) { return serialize(e); });

  py::class_<AlertTracker>(m, "AlertTracker")
      .def(py::init<TemporalConfig>(), py::arg("cfg") = TemporalConfig{})
      .def("observe", &AlertTracker::observe)
      .def("flush_all", &AlertTracker::flush_all);

  // -- evaluation ---------------------------------------------------------
  m.def(
      "make_splits",
      [](const std::vector<ManifestEntry>& manifest, std::uint64_t seed,
         std::tuple<double, double, double> ratios) {
        const auto [a, b, c] = ratios;
        const auto s = make_splits(manifest, seed, SplitRatios{a, b, c});
        std::vector<std::pair<std::string, std::string>> out;
        out.reserve(s.entries.size());
        for (const auto& [id, split] : s.entries)
          out.emplace_back(id, std::string(to_string(split)));
        return out;
      },
      py::arg("manifest"), py::arg("seed"),
      py::arg("ratios") = std::make_tuple(0.70, 0.15, 0.15));

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_readonly("counts", &ConfusionMatrix::counts)
      .def("total", &ConfusionMatrix::total)
      .def("trace", &ConfusionMatrix::trace);

  py::class_<ClassResult>(m, "ClassResult")
      .def_readonly("label", &ClassResult::label)
      .def_readonly("samples", &ClassResult::samples)
      .def_readonly("accuracy", &ClassResult::accuracy)
      .def_readonly("precision", &ClassResult::precision);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("matrix", &EvalReport::matrix)
      .def_readonly("classes", &EvalReport::classes)
      .def_readonly("overall_accuracy", &EvalReport::overall_accuracy)
      .def_readonly("provenance", &EvalReport::provenance);

  // predictions as (sample_id, label text) pairs, labels as ManifestEntry
  m.def(
      "evaluate",
      [](const std::vector<std::pair<std::string, std::string>>& preds,
         const std::vector<ManifestEntry>& labels, std::string provenance) {
        std::vector<Prediction> p;
        p.reserve(preds.size());
        for (const auto& [id, text] : preds) {
          auto label = parse_predicted_label(text);
          if (!label) throw py::value_error("unknown predicted label '" + text + "'");
          p.push_back({id, *label});
        }
        return per_class_accuracy(confusion_matrix(p, labels), std::move(provenance));
      },
      py::arg("predictions"), py::arg("labels"), py::arg("provenance") = "");
  m.def("render_report", [](const EvalReport& r, const std::string& format) {
    auto f = parse_report_format(format);
    if (!f) throw py::value_error("format must be 'json' or 'table'");
    return render_report(r, *f);
  });

  // -- synthetic backend --------------------------------------------------
  m.def("synthesize", [](const std::string& script_json) {
    return synthesize(parse_scenario(script_json));
  });
}
