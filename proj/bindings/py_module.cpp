#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tracemine/behavior_metrics.hpp"
#include "tracemine/errors.hpp"
#include "tracemine/pipeline.hpp"
#include "tracemine/synth.hpp"
#include "tracemine/topology.hpp"

namespace py = pybind11;
using namespace tracemine;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  py::module_ json = py::module_::import("json");
  return json.attr("loads")(j.dump());
}

SignalKind kind_from(const std::string& name) {
  auto kind = signal_kind_from_name(name);
  if (!kind) throw py::value_error("unknown signal kind: " + name);
  return *kind;
}

std::set<Pattern> patterns_from(const std::vector<std::string>& names) {
  std::set<Pattern> out;
  for (const auto& name : names) {
    auto p = pattern_from_name(name);
    if (!p) throw py::value_error("unknown pattern: " + name);
    out.insert(*p);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pattern mining over agent reasoning traces";

  py::register_exception<Error>(m, "TraceMineError");

  py::enum_<Pattern>(m, "Pattern")
      .value("P1", Pattern::P1)
      .value("P2", Pattern::P2)
      .value("P3", Pattern::P3)
      .value("P4", Pattern::P4);

  py::class_<Session>(m, "Session")
      .def_readonly("session_id", &Session::session_id)
      .def_readonly("binary_id", &Session::binary_id)
      .def_readonly("assistant_indices", &Session::assistant_indices)
      .def_property_readonly("num_records",
                             [](const Session& s) { return s.steps.size(); })
      .def("__repr__", [](const Session& s) {
        return "<Session " + s.session_id + " records=" + std::to_string(s.steps.size()) + ">";
      });

  py::class_<AssistantStep>(m, "AssistantStep")
      .def_readonly("step_pos", &AssistantStep::step_pos)
      .def_readonly("thought", &AssistantStep::thought)
      .def_readonly("action", &AssistantStep::action)
      .def_readonly("command", &AssistantStep::command)
      .def_readonly("status", &AssistantStep::status);

  py::class_<Lexicon>(m, "Lexicon")
      .def_static("builtin", []() { return Lexicon::builtin(); })
      .def_static("load", &Lexicon::load_file, py::arg("path"))
      .def_static("parse_text", [](const std::string& text) { return Lexicon::parse(text); },
                  py::arg("text"))
      .def_property_readonly("version", &Lexicon::version);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("p1_min_span_after_prune", &DetectorConfig::p1_min_span_after_prune)
      .def_readwrite("p2_min_cont", &DetectorConfig::p2_min_cont)
      .def_readwrite("p2_min_span", &DetectorConfig::p2_min_span)
      .def_readwrite("p3_min_gap", &DetectorConfig::p3_min_gap)
      .def_readwrite("p4_min_features", &DetectorConfig::p4_min_features)
      .def_readwrite("evidence_chars", &DetectorConfig::evidence_chars)
      .def_readwrite("backtrack_entity_gap", &DetectorConfig::backtrack_entity_gap)
      .def_readwrite("p4_segment_window", &DetectorConfig::p4_segment_window);

  py::class_<PatternInstance>(m, "PatternInstance")
      .def_readonly("pattern", &PatternInstance::pattern)
      .def_readonly("session_id", &PatternInstance::session_id)
      .def_readonly("anchor_step", &PatternInstance::anchor_step)
      .def_readonly("start_step", &PatternInstance::start_step)
      .def_readonly("end_step", &PatternInstance::end_step)
      .def("to_dict", [](const PatternInstance& inst) { return json_to_py(instance_to_json(inst)); })
      .def("__repr__", [](const PatternInstance& inst) {
        return "<PatternInstance " + std::string(pattern_name(inst.pattern)) + " anchor=" +
               std::to_string(inst.anchor_step) + ">";
      });

  py::class_<SegmentMetrics>(m, "SegmentMetrics")
      .def_readonly("path_length", &SegmentMetrics::path_length)
      .def_readonly("forward_ratio", &SegmentMetrics::forward_ratio)
      .def_readonly("branching_factor", &SegmentMetrics::branching_factor)
      .def_readonly("backtrack_count", &SegmentMetrics::backtrack_count)
      .def_readonly("pruning_rate", &SegmentMetrics::pruning_rate)
      .def_readonly("decision_points", &SegmentMetrics::decision_points)
      .def_readonly("multi_alt_points", &SegmentMetrics::multi_alt_points)
      .def_readonly("prune_points", &SegmentMetrics::prune_points);

  py::class_<TransitionGraph>(m, "TransitionGraph")
      .def_readonly("nodes", &TransitionGraph::nodes)
      .def_readonly("sequence_length", &TransitionGraph::sequence_length)
      .def_property_readonly("edges",
                             [](const TransitionGraph& g) {
                               py::dict out;
                               for (const auto& [edge, count] : g.edges)
                                 out[py::make_tuple(edge.first, edge.second)] = count;
                               return out;
                             })
      .def("to_edge_list", &graph_to_edge_list);

  py::class_<TopologyMetrics>(m, "TopologyMetrics")
      .def_readonly("diversity", &TopologyMetrics::diversity)
      .def_readonly("length", &TopologyMetrics::length)
      .def_readonly("max_depth", &TopologyMetrics::max_depth)
      .def_readonly("max_fanout", &TopologyMetrics::max_fanout)
      .def_readonly("has_cycle", &TopologyMetrics::has_cycle)
      .def_readonly("transition_entropy", &TopologyMetrics::transition_entropy);

  m.def("parse_session", &parse_session, py::arg("text"), py::arg("session_id") = "session");
  m.def("parse_session_file", &parse_session_file, py::arg("path"));
  m.def("serialize_session", &serialize_session, py::arg("session"));
  m.def("project_assistant_steps", &project_assistant_steps, py::arg("session"));
  m.def("select_representative_session",
        [](const std::vector<Session>& sessions, const std::vector<bool>& complete) {
          if (sessions.size() != complete.size())
            throw py::value_error("sessions and completeness flags differ in length");
          std::vector<SessionCandidate> candidates;
          for (std::size_t i = 0; i < sessions.size(); ++i)
            candidates.push_back({&sessions[i], complete[i]});
          return select_representative_session(candidates);  // returns a copy
        },
        py::arg("sessions"), py::arg("complete"));

  m.def("extract_semantic_entities",
        [](const std::string& text) { return extract_semantic_entities(text).entities; },
        py::arg("text"));
  m.def("match_signal",
        [](const std::string& kind, const std::string& text, const Lexicon& lexicon) {
          return match_signal(kind_from(kind), text, lexicon);
        },
        py::arg("kind"), py::arg("text"), py::arg("lexicon"));

  m.def("detect_all",
        [](const Session& session, const Lexicon& lexicon, const DetectorConfig& config) {
          return detect_all(session, lexicon, config);
        },
        py::arg("session"), py::arg("lexicon") = Lexicon::builtin(),
        py::arg("config") = DetectorConfig{});

  m.def("compute_metrics",
        [](const std::vector<AssistantStep>& segment, Pattern pattern, const Lexicon& lexicon,
           const DetectorConfig& config) {
          return compute_metrics(segment, pattern, lexicon, config);
        },
        py::arg("segment"), py::arg("pattern"), py::arg("lexicon") = Lexicon::builtin(),
        py::arg("config") = DetectorConfig{});

  m.def("base_command", &base_command, py::arg("command"));
  m.def("build_graph",
        [](const std::vector<AssistantStep>& segment) { return build_graph(segment); },
        py::arg("segment"));
  m.def("topology_metrics",
        [](const TransitionGraph& graph, const std::vector<AssistantStep>& segment) {
          return topology_metrics(graph, segment);
        },
        py::arg("graph"), py::arg("segment"));

  m.def("analyze_corpus",
        [](const std::filesystem::path& corpus_dir, py::object lexicon_path,
           py::object thresholds_path, const std::vector<std::string>& patterns, int jobs,
           bool skip_bad, int top_k) {
          AnalyzeOptions options;
          if (!lexicon_path.is_none())
            options.lexicon_path = lexicon_path.cast<std::filesystem::path>();
          if (!thresholds_path.is_none())
            options.thresholds_path = thresholds_path.cast<std::filesystem::path>();
          options.patterns = patterns_from(patterns);
          options.jobs = jobs;
          options.skip_bad = skip_bad;
          options.top_k = top_k;
          return json_to_py(report_to_json(analyze_corpus(corpus_dir, options)));
        },
        py::arg("corpus_dir"), py::arg("lexicon_path") = py::none(),
        py::arg("thresholds_path") = py::none(),
        py::arg("patterns") = std::vector<std::string>{"p1", "p2", "p3", "p4"},
        py::arg("jobs") = 1, py::arg("skip_bad") = false, py::arg("top_k") = 10);

  m.def("generate_corpus",
        [](const std::filesystem::path& out_dir, int sessions, int steps, double p1, double p2,
           double p3, double p4, std::uint64_t seed) {
          auto result =
              synth::generate_corpus(out_dir, sessions, steps, {p1, p2, p3, p4}, seed);
          long expected = 0;
          for (const auto& truth : result.sessions)
            expected += static_cast<long>(truth.expected.size());
          py::dict out;
          out["manifest_path"] = result.manifest_path.string();
          out["sessions"] = result.sessions.size();
          out["expected_instances"] = expected;
          return out;
        },
        py::arg("out_dir"), py::arg("sessions"), py::arg("steps"), py::arg("p1") = 0.0,
        py::arg("p2") = 0.0, py::arg("p3") = 0.0, py::arg("p4") = 0.0, py::arg("seed") = 1);

  m.def("load_manifest", &synth::load_manifest, py::arg("path"));

  m.attr("__version__") = kToolkitVersion;
}
