#include "tracemine/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

#include "tracemine/behavior_metrics.hpp"
#include "tracemine/errors.hpp"
#include "tracemine/synth.hpp"
#include "tracemine/topology.hpp"

namespace tracemine {

namespace {

struct SessionSummary {
  std::string session_id;
  long record_count = 0;
  int assistant_count = 0;
  std::vector<PatternInstance> instances;
  std::vector<std::pair<Pattern, SegmentMetrics>> metrics;
  std::vector<std::pair<Pattern, TopologyMetrics>> topology;
  bool skipped = false;
  std::string warning;
};

SessionSummary process_session(const std::filesystem::path& file, const Lexicon& lexicon,
                               const DetectorConfig& config, const std::set<Pattern>& patterns) {
  SessionSummary summary;
  Session session = parse_session_file(file);
  summary.session_id = session.session_id;
  summary.record_count = static_cast<long>(session.steps.size());

  std::vector<AssistantStep> steps = project_assistant_steps(session);
  summary.assistant_count = static_cast<int>(steps.size());
  EntityHistory history = EntityHistory::build(steps);

  summary.instances = detect_all(session, lexicon, config, patterns);
  for (const auto& inst : summary.instances) {
    std::span<const AssistantStep> segment(steps.data() + inst.start_step,
                                           static_cast<std::size_t>(inst.end_step - inst.start_step + 1));
    summary.metrics.emplace_back(inst.pattern,
                                 compute_metrics(segment, inst.pattern, lexicon, config, &history));
    TransitionGraph graph = build_graph(segment);
    summary.topology.emplace_back(inst.pattern, topology_metrics(graph, segment));
  }
  return summary;
}

bool is_parse_failure(const std::exception_ptr& eptr) {
  try {
    std::rethrow_exception(eptr);
  } catch (const InvariantViolation&) {
    return false;
  } catch (const Error&) {
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace

DetectorConfig load_thresholds(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open thresholds file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("thresholds file " + path.string() + ": " + e.what());
  }
  DetectorConfig config;
  for (const auto& [key, value] : j.items()) {
    if (key == "p1_min_span_after_prune")
      config.p1_min_span_after_prune = value.get<int>();
    else if (key == "p2_min_cont")
      config.p2_min_cont = value.get<int>();
    else if (key == "p2_min_span")
      config.p2_min_span = value.get<int>();
    else if (key == "p3_min_gap")
      config.p3_min_gap = value.get<int>();
    else if (key == "p4_min_features")
      config.p4_min_features = value.get<int>();
    else if (key == "evidence_chars")
      config.evidence_chars = value.get<int>();
    else if (key == "backtrack_entity_gap")
      config.backtrack_entity_gap = value.get<int>();
    else if (key == "p4_segment_window")
      config.p4_segment_window = value.get<int>();
    else
      throw Error("thresholds file " + path.string() + ": unknown key '" + key + "'");
  }
  return config;
}

CorpusReport analyze_corpus(const std::filesystem::path& corpus_dir,
                            const AnalyzeOptions& options) {
  std::vector<std::filesystem::path> files;
  {
    std::error_code ec;
    std::filesystem::directory_iterator it(corpus_dir, ec);
    if (ec) throw Error("cannot read corpus directory " + corpus_dir.string());
    for (const auto& entry : it)
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
        files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .jsonl session files in " + corpus_dir.string());

  const Lexicon lexicon =
      options.lexicon_path ? Lexicon::load_file(*options.lexicon_path) : Lexicon::builtin();
  const DetectorConfig config =
      options.thresholds_path ? load_thresholds(*options.thresholds_path) : DetectorConfig{};

  // Per-file work runs in parallel; every result lands in its file's slot so
  // the sequential reduction below is independent of the thread schedule.
  std::vector<SessionSummary> summaries(files.size());
  std::vector<std::exception_ptr> errors(files.size());
  {
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
      while (true) {
        std::size_t index = cursor.fetch_add(1);
        if (index >= files.size()) return;
        try {
          summaries[index] = process_session(files[index], lexicon, config, options.patterns);
        } catch (...) {
          errors[index] = std::current_exception();
        }
      }
    };
    int jobs = std::max(1, options.jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }

  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!errors[i]) continue;
    if (options.skip_bad && is_parse_failure(errors[i])) {
      summaries[i].skipped = true;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        summaries[i].warning = files[i].string() + ": " + e.what();
      }
      continue;
    }
    try {
      std::rethrow_exception(errors[i]);
    } catch (const InvariantViolation&) {
      throw;
    } catch (const MalformedRecord& e) {
      throw MalformedRecord(e.line_no(), files[i].string() + ": " + e.detail());
    } catch (const EmptySession&) {
      throw Error(files[i].string() + ": session contains no records");
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(files[i].string() + ": " + e.what());
    }
  }

  // Reduction, in sorted file order.
  CorpusReport report;
  std::vector<long> record_counts;
  std::vector<PatternInstance> all_instances;
  std::vector<BlockSequence> blocks;
  std::vector<std::array<long, 4>> per_session_counts;
  std::vector<long> session_totals;
  std::map<std::string, int> assistant_counts;
  std::vector<std::pair<Pattern, SegmentMetrics>> all_metrics;
  std::vector<std::pair<Pattern, TopologyMetrics>> all_topology;

  for (const auto& summary : summaries) {
    if (summary.skipped) {
      std::cerr << "warning: skipping " << summary.warning << '\n';
      report.run_metadata.skipped_files += 1;
      continue;
    }
    record_counts.push_back(summary.record_count);
    assistant_counts[summary.session_id] = summary.assistant_count;

    std::array<long, 4> counts{};
    for (const auto& inst : summary.instances)
      counts[static_cast<std::size_t>(pattern_index(inst.pattern))] += 1;
    per_session_counts.push_back(counts);
    session_totals.push_back(static_cast<long>(summary.instances.size()));

    blocks.push_back(collapse_blocks(summary.session_id, summary.instances));
    all_instances.insert(all_instances.end(), summary.instances.begin(), summary.instances.end());
    all_metrics.insert(all_metrics.end(), summary.metrics.begin(), summary.metrics.end());
    all_topology.insert(all_topology.end(), summary.topology.begin(), summary.topology.end());
  }

  const long session_count = static_cast<long>(record_counts.size());
  if (session_count == 0) throw EmptySession();

  RunMetadata& meta = report.run_metadata;
  meta.lexicon_version = lexicon.version();
  meta.thresholds = config;
  meta.seed = options.seed;
  meta.session_count = session_count;
  for (long c : record_counts) meta.total_steps += c;
  meta.mean_steps = static_cast<double>(meta.total_steps) / static_cast<double>(session_count);
  {
    std::vector<long> sorted = record_counts;
    std::sort(sorted.begin(), sorted.end());
    meta.median_steps = static_cast<double>(sorted[(sorted.size() - 1) / 2]);
  }

  report.prevalence = prevalence_density(all_instances, session_count);
  report.total_distribution = per_session_total_distribution(session_totals);

  auto transitions = transition_counts(blocks);
  for (const auto& [pair, stat] : transitions)
    report.transitions.push_back({pair.first, pair.second, stat.count, stat.proportion});
  std::sort(report.transitions.begin(), report.transitions.end(),
            [](const TransitionRow& a, const TransitionRow& b) {
              if (a.count != b.count) return a.count > b.count;
              if (a.from != b.from) return a.from < b.from;
              return a.to < b.to;
            });

  auto mined = mine_subsequences(blocks);
  // Cross-module consistency: length-2 windows must agree with transitions,
  // and the transition total must equal the per-session block-gap sum.
  {
    std::map<std::pair<Pattern, Pattern>, long> len2;
    for (const auto& row : mined)
      if (row.sequence.size() == 2) len2[{row.sequence[0], row.sequence[1]}] = row.count;
    std::map<std::pair<Pattern, Pattern>, long> trans;
    long transition_total = 0;
    for (const auto& [pair, stat] : transitions) {
      trans[pair] = stat.count;
      transition_total += stat.count;
    }
    if (len2 != trans)
      throw InvariantViolation("length-2 subsequence counts disagree with transition counts");
    long block_gaps = 0;
    for (const auto& seq : blocks)
      block_gaps += std::max<long>(static_cast<long>(seq.blocks.size()) - 1, 0);
    if (transition_total != block_gaps)
      throw InvariantViolation("transition total disagrees with per-session block gaps");
  }
  for (std::size_t i = 0; i < mined.size() && i < static_cast<std::size_t>(options.top_k); ++i)
    report.subsequences.push_back({mined[i].sequence, mined[i].count, static_cast<long>(i + 1)});

  report.segment_metrics = aggregate_metrics(all_metrics);
  report.topology = aggregate_topology(all_topology);
  for (Pattern p : kAllPatterns) {
    report.segment_metrics.try_emplace(p);
    report.topology.try_emplace(p);
    auto& expl = report.exploration_selection[static_cast<std::size_t>(pattern_index(p))];
    const auto& agg = report.segment_metrics[p];
    expl.b_mean = agg.branching_factor.mean;
    expl.p_mean = agg.pruning_rate_mean;
  }

  report.temporal = temporal_histogram(all_instances, assistant_counts);
  report.correlations = normalized_correlations(per_session_counts);
  return report;
}

}  // namespace tracemine
