#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tracemine/behavior_metrics.hpp"
#include "tracemine/errors.hpp"
#include "tracemine/pipeline.hpp"
#include "tracemine/synth.hpp"
#include "tracemine/topology.hpp"

namespace {

using namespace tracemine;

std::set<Pattern> parse_patterns(const std::string& csv) {
  std::set<Pattern> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto p = pattern_from_name(item);
    if (!p) throw CLI::ValidationError("--patterns", "unknown pattern '" + item + "'");
    out.insert(*p);
  }
  if (out.empty()) throw CLI::ValidationError("--patterns", "no patterns selected");
  return out;
}

synth::PlantMeans parse_plant_means(const std::string& spec) {
  synth::PlantMeans means;
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--plant", "expected p<n>:<count>, got '" + item + "'");
    auto pattern = pattern_from_name(item.substr(0, colon));
    if (!pattern) throw CLI::ValidationError("--plant", "unknown pattern in '" + item + "'");
    double value = std::stod(item.substr(colon + 1));
    switch (*pattern) {
      case Pattern::P1: means.p1 = value; break;
      case Pattern::P2: means.p2 = value; break;
      case Pattern::P3: means.p3 = value; break;
      case Pattern::P4: means.p4 = value; break;
    }
  }
  return means;
}

int run_analyze(const std::string& corpus_dir, const std::string& out_dir,
                const std::string& format, const std::string& lexicon_path,
                const std::string& thresholds_path, const std::string& patterns_csv, int jobs,
                bool skip_bad) {
  AnalyzeOptions options;
  if (!lexicon_path.empty()) options.lexicon_path = lexicon_path;
  if (!thresholds_path.empty()) options.thresholds_path = thresholds_path;
  options.patterns = parse_patterns(patterns_csv);
  options.jobs = jobs;
  options.skip_bad = skip_bad;

  CorpusReport report = analyze_corpus(corpus_dir, options);

  ReportFormat rf = format == "obj"   ? ReportFormat::Object
                    : format == "csv" ? ReportFormat::Csv
                                      : ReportFormat::Summary;
  write_report_files(report, out_dir, rf);
  if (rf == ReportFormat::Summary) std::cout << render_summary(report);
  std::cerr << "report written to " << out_dir << '\n';
  return 0;
}

int run_synth(int sessions, int steps, const std::string& plant, std::uint64_t seed,
              const std::string& out_dir, const std::string& lexicon_path) {
  const Lexicon lexicon =
      lexicon_path.empty() ? Lexicon::builtin() : Lexicon::load_file(lexicon_path);
  synth::CorpusResult result =
      synth::generate_corpus(out_dir, sessions, steps, parse_plant_means(plant), seed, lexicon);
  long expected = 0;
  for (const auto& truth : result.sessions) expected += static_cast<long>(truth.expected.size());
  std::cout << "wrote " << result.sessions.size() << " sessions to " << out_dir << " ("
            << expected << " expected instances; manifest " << result.manifest_path.string()
            << ")\n";
  return 0;
}

int run_graph_export(const std::string& session_file, const std::string& out_file,
                     const std::string& lexicon_path, bool per_instance) {
  Session session = parse_session_file(session_file);
  std::vector<AssistantStep> steps = project_assistant_steps(session);

  std::ostringstream out;
  if (per_instance) {
    const Lexicon& lexicon =
        lexicon_path.empty() ? Lexicon::builtin() : Lexicon::load_file(lexicon_path);
    for (const auto& inst : detect_all(session, lexicon)) {
      std::span<const AssistantStep> segment(
          steps.data() + inst.start_step,
          static_cast<std::size_t>(inst.end_step - inst.start_step + 1));
      out << "# " << session.session_id << ' ' << pattern_name(inst.pattern) << " anchor="
          << inst.anchor_step << " steps=" << inst.start_step << ".." << inst.end_step << '\n';
      out << graph_to_edge_list(build_graph(segment));
    }
  } else {
    out << graph_to_edge_list(build_graph(std::span<const AssistantStep>(steps)));
  }

  if (out_file.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream file(out_file, std::ios::binary);
    if (!file) throw UnwritableOutput("cannot write " + out_file);
    file << out.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tracemine: pattern mining over agent reasoning traces"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "Analyze a directory of .jsonl session traces");
  std::string corpus_dir;
  std::string out_dir = "tracemine_out";
  std::string format = "summary";
  std::string lexicon_path;
  std::string thresholds_path;
  std::string patterns_csv = "p1,p2,p3,p4";
  int jobs = 1;
  bool skip_bad = false;
  analyze->add_option("dir", corpus_dir, "corpus directory")->required();
  analyze->add_option("--out", out_dir, "output directory (default tracemine_out)");
  analyze->add_option("--format", format, "obj | csv | summary")
      ->check(CLI::IsMember({"obj", "csv", "summary"}));
  analyze->add_option("--lexicon", lexicon_path, "signal lexicon file");
  analyze->add_option("--thresholds", thresholds_path, "detector thresholds JSON file");
  analyze->add_option("--patterns", patterns_csv, "comma list of patterns to detect");
  analyze->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  analyze->add_flag("--skip-bad", skip_bad, "warn and skip unparseable session files");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  int sessions = 10;
  int steps = 150;
  std::string plant = "p1:2,p2:4,p3:1,p4:6";
  std::uint64_t seed = 1;
  std::string synth_out;
  std::string synth_lexicon;
  synth_cmd->add_option("--sessions", sessions, "number of sessions")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--steps", steps, "assistant steps per session")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--plant", plant, "mean plants per session, e.g. p1:6,p2:19,p3:2,p4:27");
  synth_cmd->add_option("--seed", seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--lexicon", synth_lexicon, "signal lexicon file");

  auto* graph = app.add_subcommand("graph-export", "Export command transition graphs");
  std::string session_file;
  std::string graph_out;
  std::string graph_lexicon;
  bool per_instance = false;
  graph->add_option("file", session_file, "session .jsonl file")->required();
  graph->add_option("--out", graph_out, "output file (default stdout)");
  graph->add_option("--lexicon", graph_lexicon, "signal lexicon file");
  graph->add_flag("--per-instance", per_instance, "one graph per detected pattern instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*analyze)
      return run_analyze(corpus_dir, out_dir, format, lexicon_path, thresholds_path, patterns_csv,
                         jobs, skip_bad);
    if (*synth_cmd) return run_synth(sessions, steps, plant, seed, synth_out, synth_lexicon);
    if (*graph) return run_graph_export(session_file, graph_out, graph_lexicon, per_instance);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  } catch (const UnwritableOutput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const MalformedRecord& e) {
    std::cerr << "parse failure: " << e.what() << '\n';
    return 2;
  } catch (const EmptySession& e) {
    std::cerr << "parse failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
