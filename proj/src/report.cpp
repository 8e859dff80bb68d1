#include "tracemine/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tracemine/errors.hpp"

namespace tracemine {

namespace {

nlohmann::json num(double value) {
  if (std::isnan(value) || std::isinf(value)) return nullptr;
  return round_sig(value);
}

double num_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

std::string fmt(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", round_sig(value));
  return buf;
}

std::string sequence_label(const std::vector<Pattern>& sequence) {
  std::string out;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i) out += "->";
    out += pattern_name(sequence[i]);
  }
  return out;
}

nlohmann::json stats_to_json(const Stats& s) {
  return {{"mean", num(s.mean)}, {"median", num(s.median)}, {"std", num(s.std_dev)}};
}

Stats stats_from_json(const nlohmann::json& j) {
  Stats s;
  s.mean = num_from(j.at("mean"));
  s.median = num_from(j.at("median"));
  s.std_dev = num_from(j.at("std"));
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UnwritableOutput("cannot write " + path.string());
  return out;
}

}  // namespace

double round_sig(double value, int digits) {
  if (value == 0.0 || std::isnan(value) || std::isinf(value)) return value;
  double magnitude = std::ceil(std::log10(std::fabs(value)));
  double factor = std::pow(10.0, digits - magnitude);
  return std::round(value * factor) / factor;
}

nlohmann::json report_to_json(const CorpusReport& report) {
  nlohmann::json j;

  const RunMetadata& meta = report.run_metadata;
  j["run_metadata"] = {
      {"lexicon_version", meta.lexicon_version},
      {"thresholds",
       {{"p1_min_span_after_prune", meta.thresholds.p1_min_span_after_prune},
        {"p2_min_cont", meta.thresholds.p2_min_cont},
        {"p2_min_span", meta.thresholds.p2_min_span},
        {"p3_min_gap", meta.thresholds.p3_min_gap},
        {"p4_min_features", meta.thresholds.p4_min_features},
        {"evidence_chars", meta.thresholds.evidence_chars},
        {"backtrack_entity_gap", meta.thresholds.backtrack_entity_gap},
        {"p4_segment_window", meta.thresholds.p4_segment_window}}},
      {"seed", meta.seed},
      {"toolkit_version", meta.toolkit_version},
      {"session_count", meta.session_count},
      {"total_steps", meta.total_steps},
      {"median_steps", num(meta.median_steps)},
      {"mean_steps", num(meta.mean_steps)},
      {"skipped_files", meta.skipped_files}};

  j["prevalence_density"] = nlohmann::json::array();
  for (int p = 0; p < 4; ++p) {
    const auto& row = report.prevalence[static_cast<std::size_t>(p)];
    j["prevalence_density"].push_back({{"pattern", pattern_name(static_cast<Pattern>(p))},
                                       {"sessions_with", row.sessions_with},
                                       {"coverage", num(row.coverage)},
                                       {"total", row.total},
                                       {"avg_per_session", num(row.avg_per_session)},
                                       {"avg_per_active", num(row.avg_per_active)},
                                       {"max_per_session", row.max_per_session}});
  }

  j["total_distribution"] = nlohmann::json::array();
  for (int b = 0; b < 7; ++b)
    j["total_distribution"].push_back(
        {{"band", kDistributionBandLabels[static_cast<std::size_t>(b)]},
         {"sessions", report.total_distribution.sessions[static_cast<std::size_t>(b)]},
         {"percentage", num(report.total_distribution.percentage(b))}});

  j["transitions"] = nlohmann::json::array();
  for (const auto& row : report.transitions)
    j["transitions"].push_back({{"from", pattern_name(row.from)},
                                {"to", pattern_name(row.to)},
                                {"count", row.count},
                                {"proportion", num(row.proportion)}});

  j["subsequences"] = nlohmann::json::array();
  for (const auto& row : report.subsequences) {
    nlohmann::json seq = nlohmann::json::array();
    for (Pattern p : row.sequence) seq.push_back(pattern_name(p));
    j["subsequences"].push_back({{"rank", row.rank}, {"sequence", seq}, {"count", row.count}});
  }

  j["segment_metric_aggregates"] = nlohmann::json::array();
  for (int p = 0; p < 4; ++p) {
    Pattern pattern = static_cast<Pattern>(p);
    MetricAggregate agg;
    if (auto it = report.segment_metrics.find(pattern); it != report.segment_metrics.end())
      agg = it->second;
    j["segment_metric_aggregates"].push_back({{"pattern", pattern_name(pattern)},
                                              {"count", agg.count},
                                              {"path_length", stats_to_json(agg.path_length)},
                                              {"forward_ratio", stats_to_json(agg.forward_ratio)},
                                              {"branching_factor", stats_to_json(agg.branching_factor)},
                                              {"backtrack_count", stats_to_json(agg.backtrack_count)}});
  }

  j["exploration_selection"] = nlohmann::json::array();
  for (int p = 0; p < 4; ++p)
    j["exploration_selection"].push_back(
        {{"pattern", pattern_name(static_cast<Pattern>(p))},
         {"b_mean", num(report.exploration_selection[static_cast<std::size_t>(p)].b_mean)},
         {"p_mean", num(report.exploration_selection[static_cast<std::size_t>(p)].p_mean)}});

  j["topology_aggregates"] = nlohmann::json::array();
  for (int p = 0; p < 4; ++p) {
    Pattern pattern = static_cast<Pattern>(p);
    TopologyAggregate agg;
    if (auto it = report.topology.find(pattern); it != report.topology.end()) agg = it->second;
    j["topology_aggregates"].push_back({{"pattern", pattern_name(pattern)},
                                        {"count", agg.count},
                                        {"diversity_mean", num(agg.diversity_mean)},
                                        {"length_mean", num(agg.length_mean)},
                                        {"depth_mean", num(agg.depth_mean)},
                                        {"fanout_mean", num(agg.fanout_mean)},
                                        {"cycles_pct", num(agg.cycles_pct)},
                                        {"entropy_mean", num(agg.entropy_mean)}});
  }

  j["temporal_histogram"] = nlohmann::json::array();
  for (int p = 0; p < 4; ++p) {
    nlohmann::json bins = nlohmann::json::array();
    for (double v : report.temporal.bins[static_cast<std::size_t>(p)]) bins.push_back(num(v));
    j["temporal_histogram"].push_back(
        {{"pattern", pattern_name(static_cast<Pattern>(p))}, {"bins", bins}});
  }

  nlohmann::json rows = nlohmann::json::array();
  for (int p = 0; p < 4; ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (int q = 0; q < 4; ++q)
      row.push_back(num(report.correlations.r[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]));
    rows.push_back(row);
  }
  j["correlation_matrix"] = {{"patterns", {"P1", "P2", "P3", "P4"}}, {"r", rows}};

  return j;
}

CorpusReport report_from_json(const nlohmann::json& j) {
  CorpusReport report;

  const auto& meta = j.at("run_metadata");
  report.run_metadata.lexicon_version = meta.at("lexicon_version").get<std::string>();
  const auto& thresholds = meta.at("thresholds");
  report.run_metadata.thresholds.p1_min_span_after_prune =
      thresholds.at("p1_min_span_after_prune").get<int>();
  report.run_metadata.thresholds.p2_min_cont = thresholds.at("p2_min_cont").get<int>();
  report.run_metadata.thresholds.p2_min_span = thresholds.at("p2_min_span").get<int>();
  report.run_metadata.thresholds.p3_min_gap = thresholds.at("p3_min_gap").get<int>();
  report.run_metadata.thresholds.p4_min_features = thresholds.at("p4_min_features").get<int>();
  report.run_metadata.thresholds.evidence_chars = thresholds.at("evidence_chars").get<int>();
  report.run_metadata.thresholds.backtrack_entity_gap =
      thresholds.at("backtrack_entity_gap").get<int>();
  report.run_metadata.thresholds.p4_segment_window =
      thresholds.at("p4_segment_window").get<int>();
  report.run_metadata.seed = meta.at("seed").get<std::uint64_t>();
  report.run_metadata.toolkit_version = meta.at("toolkit_version").get<std::string>();
  report.run_metadata.session_count = meta.at("session_count").get<long>();
  report.run_metadata.total_steps = meta.at("total_steps").get<long>();
  report.run_metadata.median_steps = num_from(meta.at("median_steps"));
  report.run_metadata.mean_steps = num_from(meta.at("mean_steps"));
  report.run_metadata.skipped_files = meta.at("skipped_files").get<long>();

  for (const auto& row : j.at("prevalence_density")) {
    auto p = pattern_from_name(row.at("pattern").get<std::string>());
    PrevalenceDensity& dest = report.prevalence[static_cast<std::size_t>(pattern_index(*p))];
    dest.sessions_with = row.at("sessions_with").get<long>();
    dest.coverage = num_from(row.at("coverage"));
    dest.total = row.at("total").get<long>();
    dest.avg_per_session = num_from(row.at("avg_per_session"));
    dest.avg_per_active = num_from(row.at("avg_per_active"));
    dest.max_per_session = row.at("max_per_session").get<long>();
  }

  {
    int b = 0;
    for (const auto& row : j.at("total_distribution")) {
      report.total_distribution.sessions[static_cast<std::size_t>(b++)] =
          row.at("sessions").get<long>();
    }
    long sum = 0;
    const auto& first = j.at("total_distribution").at(0);
    double pct = num_from(first.at("percentage"));
    for (long s : report.total_distribution.sessions) sum += s;
    // percentage column is derived; reconstruct total from the band counts.
    (void)pct;
    report.total_distribution.total_sessions = sum;
  }

  for (const auto& row : j.at("transitions")) {
    TransitionRow t;
    t.from = *pattern_from_name(row.at("from").get<std::string>());
    t.to = *pattern_from_name(row.at("to").get<std::string>());
    t.count = row.at("count").get<long>();
    t.proportion = num_from(row.at("proportion"));
    report.transitions.push_back(t);
  }

  for (const auto& row : j.at("subsequences")) {
    SubsequenceRow s;
    s.rank = row.at("rank").get<long>();
    s.count = row.at("count").get<long>();
    for (const auto& name : row.at("sequence"))
      s.sequence.push_back(*pattern_from_name(name.get<std::string>()));
    report.subsequences.push_back(std::move(s));
  }

  for (const auto& row : j.at("segment_metric_aggregates")) {
    auto p = pattern_from_name(row.at("pattern").get<std::string>());
    MetricAggregate agg;
    agg.count = row.at("count").get<long>();
    agg.path_length = stats_from_json(row.at("path_length"));
    agg.forward_ratio = stats_from_json(row.at("forward_ratio"));
    agg.branching_factor = stats_from_json(row.at("branching_factor"));
    agg.backtrack_count = stats_from_json(row.at("backtrack_count"));
    report.segment_metrics[*p] = agg;
  }

  for (const auto& row : j.at("exploration_selection")) {
    auto p = pattern_from_name(row.at("pattern").get<std::string>());
    auto& dest = report.exploration_selection[static_cast<std::size_t>(pattern_index(*p))];
    dest.b_mean = num_from(row.at("b_mean"));
    dest.p_mean = num_from(row.at("p_mean"));
  }

  for (const auto& row : j.at("topology_aggregates")) {
    auto p = pattern_from_name(row.at("pattern").get<std::string>());
    TopologyAggregate agg;
    agg.count = row.at("count").get<long>();
    agg.diversity_mean = num_from(row.at("diversity_mean"));
    agg.length_mean = num_from(row.at("length_mean"));
    agg.depth_mean = num_from(row.at("depth_mean"));
    agg.fanout_mean = num_from(row.at("fanout_mean"));
    agg.cycles_pct = num_from(row.at("cycles_pct"));
    agg.entropy_mean = num_from(row.at("entropy_mean"));
    report.topology[*p] = agg;
  }

  for (const auto& row : j.at("temporal_histogram")) {
    auto p = pattern_from_name(row.at("pattern").get<std::string>());
    int b = 0;
    for (const auto& v : row.at("bins"))
      report.temporal.bins[static_cast<std::size_t>(pattern_index(*p))][static_cast<std::size_t>(b++)] =
          num_from(v);
  }

  {
    const auto& rows = j.at("correlation_matrix").at("r");
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q)
        report.correlations.r[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
            num_from(rows.at(static_cast<std::size_t>(p)).at(static_cast<std::size_t>(q)));
  }

  // The exploration/selection means mirror into the metric aggregates so the
  // structure round-trips even though p_mean lives in two places.
  for (int p = 0; p < 4; ++p) {
    Pattern pattern = static_cast<Pattern>(p);
    auto it = report.segment_metrics.find(pattern);
    if (it != report.segment_metrics.end())
      it->second.pruning_rate_mean =
          report.exploration_selection[static_cast<std::size_t>(p)].p_mean;
  }
  return report;
}

void write_report_files(const CorpusReport& report, const std::filesystem::path& out_dir,
                        ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UnwritableOutput("cannot create " + out_dir.string() + ": " + ec.message());

  if (format == ReportFormat::Object) {
    auto out = open_out(out_dir / "report.json");
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw UnwritableOutput("failed writing report.json");
    return;
  }

  if (format == ReportFormat::Summary) {
    auto out = open_out(out_dir / "summary.txt");
    out << render_summary(report);
    if (!out) throw UnwritableOutput("failed writing summary.txt");
    return;
  }

  {
    auto out = open_out(out_dir / "run_metadata.csv");
    const RunMetadata& m = report.run_metadata;
    out << "key,value\n";
    out << "lexicon_version," << m.lexicon_version << '\n';
    out << "toolkit_version," << m.toolkit_version << '\n';
    out << "seed," << m.seed << '\n';
    out << "session_count," << m.session_count << '\n';
    out << "total_steps," << m.total_steps << '\n';
    out << "median_steps," << fmt(m.median_steps) << '\n';
    out << "mean_steps," << fmt(m.mean_steps) << '\n';
    out << "skipped_files," << m.skipped_files << '\n';
    out << "p1_min_span_after_prune," << m.thresholds.p1_min_span_after_prune << '\n';
    out << "p2_min_cont," << m.thresholds.p2_min_cont << '\n';
    out << "p2_min_span," << m.thresholds.p2_min_span << '\n';
    out << "p3_min_gap," << m.thresholds.p3_min_gap << '\n';
    out << "p4_min_features," << m.thresholds.p4_min_features << '\n';
    out << "evidence_chars," << m.thresholds.evidence_chars << '\n';
    out << "backtrack_entity_gap," << m.thresholds.backtrack_entity_gap << '\n';
    out << "p4_segment_window," << m.thresholds.p4_segment_window << '\n';
  }
  {
    auto out = open_out(out_dir / "prevalence_density.csv");
    out << "pattern,sessions_with,coverage,total,avg_per_session,avg_per_active,max_per_session\n";
    for (int p = 0; p < 4; ++p) {
      const auto& row = report.prevalence[static_cast<std::size_t>(p)];
      out << pattern_name(static_cast<Pattern>(p)) << ',' << row.sessions_with << ','
          << fmt(row.coverage) << ',' << row.total << ',' << fmt(row.avg_per_session) << ','
          << fmt(row.avg_per_active) << ',' << row.max_per_session << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "total_distribution.csv");
    out << "band,sessions,percentage\n";
    for (int b = 0; b < 7; ++b)
      out << kDistributionBandLabels[static_cast<std::size_t>(b)] << ','
          << report.total_distribution.sessions[static_cast<std::size_t>(b)] << ','
          << fmt(report.total_distribution.percentage(b)) << '\n';
  }
  {
    auto out = open_out(out_dir / "transitions.csv");
    out << "from,to,count,proportion\n";
    for (const auto& row : report.transitions)
      out << pattern_name(row.from) << ',' << pattern_name(row.to) << ',' << row.count << ','
          << fmt(row.proportion) << '\n';
  }
  {
    auto out = open_out(out_dir / "subsequences.csv");
    out << "rank,sequence,count\n";
    for (const auto& row : report.subsequences)
      out << row.rank << ',' << sequence_label(row.sequence) << ',' << row.count << '\n';
  }
  {
    auto out = open_out(out_dir / "segment_metrics.csv");
    out << "pattern,count,metric,mean,median,std\n";
    for (int p = 0; p < 4; ++p) {
      Pattern pattern = static_cast<Pattern>(p);
      MetricAggregate agg;
      if (auto it = report.segment_metrics.find(pattern); it != report.segment_metrics.end())
        agg = it->second;
      auto line = [&](const char* name, const Stats& s) {
        out << pattern_name(pattern) << ',' << agg.count << ',' << name << ',' << fmt(s.mean)
            << ',' << fmt(s.median) << ',' << fmt(s.std_dev) << '\n';
      };
      line("L", agg.path_length);
      line("B", agg.branching_factor);
      line("F", agg.forward_ratio);
      line("R", agg.backtrack_count);
    }
  }
  {
    auto out = open_out(out_dir / "exploration_selection.csv");
    out << "pattern,b_mean,p_mean\n";
    for (int p = 0; p < 4; ++p)
      out << pattern_name(static_cast<Pattern>(p)) << ','
          << fmt(report.exploration_selection[static_cast<std::size_t>(p)].b_mean) << ','
          << fmt(report.exploration_selection[static_cast<std::size_t>(p)].p_mean) << '\n';
  }
  {
    auto out = open_out(out_dir / "topology.csv");
    out << "pattern,count,diversity_mean,length_mean,depth_mean,fanout_mean,cycles_pct,entropy_mean\n";
    for (int p = 0; p < 4; ++p) {
      Pattern pattern = static_cast<Pattern>(p);
      TopologyAggregate agg;
      if (auto it = report.topology.find(pattern); it != report.topology.end()) agg = it->second;
      out << pattern_name(pattern) << ',' << agg.count << ',' << fmt(agg.diversity_mean) << ','
          << fmt(agg.length_mean) << ',' << fmt(agg.depth_mean) << ',' << fmt(agg.fanout_mean)
          << ',' << fmt(agg.cycles_pct) << ',' << fmt(agg.entropy_mean) << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "temporal_histogram.csv");
    out << "pattern";
    for (int b = 1; b <= 10; ++b) out << ",bin" << b;
    out << '\n';
    for (int p = 0; p < 4; ++p) {
      out << pattern_name(static_cast<Pattern>(p));
      for (double v : report.temporal.bins[static_cast<std::size_t>(p)]) out << ',' << fmt(v);
      out << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "correlations.csv");
    out << "pattern,P1,P2,P3,P4\n";
    for (int p = 0; p < 4; ++p) {
      out << pattern_name(static_cast<Pattern>(p));
      for (int q = 0; q < 4; ++q)
        out << ',' << fmt(report.correlations.r[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]);
      out << '\n';
    }
  }
}

std::string render_summary(const CorpusReport& report) {
  std::ostringstream out;
  char buf[256];
  const RunMetadata& m = report.run_metadata;

  out << "== Run ==\n";
  std::snprintf(buf, sizeof(buf),
                "sessions: %ld   total steps: %ld   median: %s   mean: %s   skipped: %ld\n",
                m.session_count, m.total_steps, fmt(m.median_steps).c_str(),
                fmt(m.mean_steps).c_str(), m.skipped_files);
  out << buf;
  out << "lexicon: " << m.lexicon_version << "   toolkit: " << m.toolkit_version << '\n';

  out << "\n== Prevalence & density ==\n";
  out << "pattern  sessions  coverage  total  avg/session  avg/active  max\n";
  for (int p = 0; p < 4; ++p) {
    const auto& row = report.prevalence[static_cast<std::size_t>(p)];
    std::snprintf(buf, sizeof(buf), "%-7s  %8ld  %7.1f%%  %5ld  %11.2f  %10.2f  %3ld\n",
                  std::string(pattern_name(static_cast<Pattern>(p))).c_str(), row.sessions_with,
                  100.0 * row.coverage, row.total, row.avg_per_session, row.avg_per_active,
                  row.max_per_session);
    out << buf;
  }

  out << "\n== Instances per session ==\n";
  for (int b = 0; b < 7; ++b) {
    std::snprintf(buf, sizeof(buf), "%-8s %6ld  %5.2f%%\n",
                  kDistributionBandLabels[static_cast<std::size_t>(b)],
                  report.total_distribution.sessions[static_cast<std::size_t>(b)],
                  report.total_distribution.percentage(b));
    out << buf;
  }

  out << "\n== Block transitions ==\n";
  for (const auto& row : report.transitions) {
    std::snprintf(buf, sizeof(buf), "%s -> %s  %6ld  %.3f\n",
                  std::string(pattern_name(row.from)).c_str(),
                  std::string(pattern_name(row.to)).c_str(), row.count, row.proportion);
    out << buf;
  }

  out << "\n== Frequent subsequences ==\n";
  for (const auto& row : report.subsequences) {
    std::snprintf(buf, sizeof(buf), "%2ld. %-18s %6ld\n", row.rank,
                  sequence_label(row.sequence).c_str(), row.count);
    out << buf;
  }

  out << "\n== Segment metrics (mean/median/std) ==\n";
  for (int p = 0; p < 4; ++p) {
    Pattern pattern = static_cast<Pattern>(p);
    MetricAggregate agg;
    if (auto it = report.segment_metrics.find(pattern); it != report.segment_metrics.end())
      agg = it->second;
    auto line = [&](const char* name, const Stats& s) {
      std::snprintf(buf, sizeof(buf), "%-3s %-2s  %8.3f  %8.3f  %8.3f\n",
                    std::string(pattern_name(pattern)).c_str(), name, s.mean, s.median, s.std_dev);
      out << buf;
    };
    line("L", agg.path_length);
    line("B", agg.branching_factor);
    line("F", agg.forward_ratio);
    line("R", agg.backtrack_count);
  }

  out << "\n== Exploration vs path selection ==\n";
  out << "pattern  B mean   P mean\n";
  for (int p = 0; p < 4; ++p) {
    std::snprintf(buf, sizeof(buf), "%-7s  %6.3f   %6.3f\n",
                  std::string(pattern_name(static_cast<Pattern>(p))).c_str(),
                  report.exploration_selection[static_cast<std::size_t>(p)].b_mean,
                  report.exploration_selection[static_cast<std::size_t>(p)].p_mean);
    out << buf;
  }

  out << "\n== Tool topology ==\n";
  out << "pattern  diversity  length  depth  fanout  cycles%  entropy\n";
  for (int p = 0; p < 4; ++p) {
    Pattern pattern = static_cast<Pattern>(p);
    TopologyAggregate agg;
    if (auto it = report.topology.find(pattern); it != report.topology.end()) agg = it->second;
    std::snprintf(buf, sizeof(buf), "%-7s  %9.2f  %6.2f  %5.2f  %6.2f  %6.1f  %7.3f\n",
                  std::string(pattern_name(pattern)).c_str(), agg.diversity_mean, agg.length_mean,
                  agg.depth_mean, agg.fanout_mean, agg.cycles_pct, agg.entropy_mean);
    out << buf;
  }

  out << "\n== Temporal phase bins ==\n";
  for (int p = 0; p < 4; ++p) {
    out << pattern_name(static_cast<Pattern>(p)) << ':';
    for (double v : report.temporal.bins[static_cast<std::size_t>(p)]) {
      std::snprintf(buf, sizeof(buf), " %5.3f", v);
      out << buf;
    }
    out << '\n';
  }

  out << "\n== Normalized-count correlations ==\n";
  out << "         P1       P2       P3       P4\n";
  for (int p = 0; p < 4; ++p) {
    out << pattern_name(static_cast<Pattern>(p)) << ' ';
    for (int q = 0; q < 4; ++q) {
      double v = report.correlations.r[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
      if (std::isnan(v))
        out << "      n/a";
      else {
        std::snprintf(buf, sizeof(buf), " %8.3f", v);
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tracemine
