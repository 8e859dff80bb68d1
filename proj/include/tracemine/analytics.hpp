#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "tracemine/detectors.hpp"

namespace tracemine {

struct PrevalenceDensity {
  long sessions_with = 0;
  double coverage = 0.0;        // sessions_with / total_sessions
  long total = 0;
  double avg_per_session = 0.0; // total / total_sessions
  double avg_per_active = 0.0;  // total / sessions_with, 0 when inactive
  long max_per_session = 0;
};

/// Per-pattern prevalence and density over a corpus. Instances must carry
/// session_id; total_sessions >= 1.
std::array<PrevalenceDensity, 4> prevalence_density(const std::vector<PatternInstance>& instances,
                                                    long total_sessions);

/// A session's pattern sequence with consecutive duplicates collapsed.
struct BlockSequence {
  std::string session_id;
  std::vector<Pattern> blocks;
};

/// `instances` must already be sorted by (anchor_step, pattern).
BlockSequence collapse_blocks(const std::string& session_id,
                              const std::vector<PatternInstance>& instances);

struct TransitionStat {
  long count = 0;
  double proportion = 0.0;
};

std::map<std::pair<Pattern, Pattern>, TransitionStat> transition_counts(
    const std::vector<BlockSequence>& sequences);

struct SubsequenceCount {
  std::vector<Pattern> sequence;
  long count = 0;
};

/// Every contiguous window of length min_len..max_len across all block
/// sequences, ranked by count descending, ties broken lexicographically.
std::vector<SubsequenceCount> mine_subsequences(const std::vector<BlockSequence>& sequences,
                                                int min_len = 2, int max_len = 4);

/// Ten phase bins per pattern, rows normalized to sum 1 (all-zero when the
/// pattern never occurs).
struct TemporalHistogram {
  std::array<std::array<double, 10>, 4> bins{};
};

/// assistant_counts maps session_id to that session's assistant step count.
TemporalHistogram temporal_histogram(const std::vector<PatternInstance>& instances,
                                     const std::map<std::string, int>& assistant_counts);

/// Pairwise product-moment correlations of per-session normalized pattern
/// counts. Entries are NaN where undefined (constant series); diagonal is 1.
struct CorrelationMatrix {
  std::array<std::array<double, 4>, 4> r{};
};

CorrelationMatrix normalized_correlations(const std::vector<std::array<long, 4>>& per_session_counts);

inline constexpr std::array<const char*, 7> kDistributionBandLabels = {
    "0", "1-10", "11-30", "31-50", "51-100", "101-200", "201+"};

struct TotalDistribution {
  std::array<long, 7> sessions{};
  long total_sessions = 0;

  double percentage(int band) const {
    return total_sessions > 0 ? 100.0 * static_cast<double>(sessions[band]) /
                                    static_cast<double>(total_sessions)
                              : 0.0;
  }
};

TotalDistribution per_session_total_distribution(const std::vector<long>& session_totals);

}  // namespace tracemine
