#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracemine/analytics.hpp"
#include "tracemine/behavior_metrics.hpp"
#include "tracemine/detectors.hpp"
#include "tracemine/topology.hpp"

namespace tracemine {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct RunMetadata {
  std::string lexicon_version;
  DetectorConfig thresholds;
  std::uint64_t seed = 0;
  std::string toolkit_version = kToolkitVersion;
  long session_count = 0;
  long total_steps = 0;     // record-level, all roles
  double median_steps = 0.0;
  double mean_steps = 0.0;
  long skipped_files = 0;
};

struct TransitionRow {
  Pattern from = Pattern::P1;
  Pattern to = Pattern::P1;
  long count = 0;
  double proportion = 0.0;
};

struct SubsequenceRow {
  std::vector<Pattern> sequence;
  long count = 0;
  long rank = 0;
};

struct ExplorationSelectionRow {
  double b_mean = 0.0;
  double p_mean = 0.0;
};

struct CorpusReport {
  RunMetadata run_metadata;
  std::array<PrevalenceDensity, 4> prevalence{};
  TotalDistribution total_distribution;
  std::vector<TransitionRow> transitions;    // count desc, ties by (from, to)
  std::vector<SubsequenceRow> subsequences;  // top-K
  std::map<Pattern, MetricAggregate> segment_metrics;
  std::array<ExplorationSelectionRow, 4> exploration_selection{};
  std::map<Pattern, TopologyAggregate> topology;
  TemporalHistogram temporal;
  CorrelationMatrix correlations;
};

enum class ReportFormat { Object, Csv, Summary };

/// Rounds to `digits` significant decimal digits; keeps report serialization
/// stable across runs. NaN passes through.
double round_sig(double value, int digits = 6);

nlohmann::json report_to_json(const CorpusReport& report);
CorpusReport report_from_json(const nlohmann::json& j);

/// Writes report.json / per-table CSVs / summary.txt under out_dir.
/// Throws UnwritableOutput on filesystem failure.
void write_report_files(const CorpusReport& report, const std::filesystem::path& out_dir,
                        ReportFormat format);

std::string render_summary(const CorpusReport& report);

}  // namespace tracemine
