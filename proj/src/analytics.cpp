#include "tracemine/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tracemine/errors.hpp"

namespace tracemine {

std::array<PrevalenceDensity, 4> prevalence_density(const std::vector<PatternInstance>& instances,
                                                    long total_sessions) {
  if (total_sessions < 1) throw InvariantViolation("prevalence_density: total_sessions < 1");

  std::array<std::map<std::string, long>, 4> per_session;
  for (const auto& inst : instances)
    per_session[static_cast<std::size_t>(pattern_index(inst.pattern))][inst.session_id] += 1;

  std::array<PrevalenceDensity, 4> out{};
  for (int p = 0; p < 4; ++p) {
    PrevalenceDensity& row = out[static_cast<std::size_t>(p)];
    for (const auto& [session, count] : per_session[static_cast<std::size_t>(p)]) {
      (void)session;
      row.sessions_with += 1;
      row.total += count;
      row.max_per_session = std::max(row.max_per_session, count);
    }
    row.coverage = static_cast<double>(row.sessions_with) / static_cast<double>(total_sessions);
    row.avg_per_session = static_cast<double>(row.total) / static_cast<double>(total_sessions);
    row.avg_per_active = row.sessions_with > 0 ? static_cast<double>(row.total) /
                                                     static_cast<double>(row.sessions_with)
                                               : 0.0;
  }
  return out;
}

BlockSequence collapse_blocks(const std::string& session_id,
                              const std::vector<PatternInstance>& instances) {
  BlockSequence seq;
  seq.session_id = session_id;
  for (const auto& inst : instances) {
    if (seq.blocks.empty() || seq.blocks.back() != inst.pattern)
      seq.blocks.push_back(inst.pattern);
  }
  return seq;
}

std::map<std::pair<Pattern, Pattern>, TransitionStat> transition_counts(
    const std::vector<BlockSequence>& sequences) {
  std::map<std::pair<Pattern, Pattern>, TransitionStat> out;
  long total = 0;
  for (const auto& seq : sequences) {
    for (std::size_t i = 1; i < seq.blocks.size(); ++i) {
      out[{seq.blocks[i - 1], seq.blocks[i]}].count += 1;
      ++total;
    }
  }
  for (auto& [pair, stat] : out) {
    (void)pair;
    stat.proportion = static_cast<double>(stat.count) / static_cast<double>(total);
  }
  return out;
}

std::vector<SubsequenceCount> mine_subsequences(const std::vector<BlockSequence>& sequences,
                                                int min_len, int max_len) {
  std::map<std::vector<Pattern>, long> counts;
  for (const auto& seq : sequences) {
    const auto n = static_cast<int>(seq.blocks.size());
    for (int len = min_len; len <= max_len; ++len) {
      for (int i = 0; i + len <= n; ++i) {
        std::vector<Pattern> window(seq.blocks.begin() + i, seq.blocks.begin() + i + len);
        counts[window] += 1;
      }
    }
  }

  std::vector<SubsequenceCount> ranked;
  ranked.reserve(counts.size());
  for (auto& [sequence, count] : counts) ranked.push_back({sequence, count});
  std::sort(ranked.begin(), ranked.end(), [](const SubsequenceCount& a, const SubsequenceCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.sequence < b.sequence;
  });
  return ranked;
}

TemporalHistogram temporal_histogram(const std::vector<PatternInstance>& instances,
                                     const std::map<std::string, int>& assistant_counts) {
  std::array<std::array<long, 10>, 4> counts{};
  for (const auto& inst : instances) {
    auto it = assistant_counts.find(inst.session_id);
    if (it == assistant_counts.end() || it->second < 1)
      throw InvariantViolation("temporal_histogram: unknown or empty session " + inst.session_id);
    int n = it->second;
    double t = n > 1 ? static_cast<double>(inst.anchor_step) / static_cast<double>(n - 1) : 0.0;
    int bin = std::min(static_cast<int>(10.0 * t), 9);
    counts[static_cast<std::size_t>(pattern_index(inst.pattern))][static_cast<std::size_t>(bin)] +=
        1;
  }

  TemporalHistogram hist;
  for (int p = 0; p < 4; ++p) {
    long row_total = 0;
    for (long c : counts[static_cast<std::size_t>(p)]) row_total += c;
    if (row_total == 0) continue;
    for (int b = 0; b < 10; ++b)
      hist.bins[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)] =
          static_cast<double>(counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)]) /
          static_cast<double>(row_total);
  }
  return hist;
}

CorrelationMatrix normalized_correlations(
    const std::vector<std::array<long, 4>>& per_session_counts) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::array<double, 4>> normalized;
  for (const auto& counts : per_session_counts) {
    long total = counts[0] + counts[1] + counts[2] + counts[3];
    if (total <= 0) continue;
    std::array<double, 4> row{};
    for (int p = 0; p < 4; ++p)
      row[static_cast<std::size_t>(p)] =
          static_cast<double>(counts[static_cast<std::size_t>(p)]) / static_cast<double>(total);
    normalized.push_back(row);
  }

  CorrelationMatrix matrix;
  for (auto& row : matrix.r) row.fill(kNaN);
  for (int p = 0; p < 4; ++p) matrix.r[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)] = 1.0;
  if (normalized.size() < 2) return matrix;

  const auto n = static_cast<double>(normalized.size());
  std::array<double, 4> mean{};
  for (const auto& row : normalized)
    for (int p = 0; p < 4; ++p) mean[static_cast<std::size_t>(p)] += row[static_cast<std::size_t>(p)];
  for (auto& m : mean) m /= n;

  std::array<double, 4> var{};
  for (const auto& row : normalized)
    for (int p = 0; p < 4; ++p) {
      double d = row[static_cast<std::size_t>(p)] - mean[static_cast<std::size_t>(p)];
      var[static_cast<std::size_t>(p)] += d * d;
    }

  for (int p = 0; p < 4; ++p) {
    for (int q = p + 1; q < 4; ++q) {
      // Degenerate (constant) series leave the correlation undefined.
      if (var[static_cast<std::size_t>(p)] == 0.0 || var[static_cast<std::size_t>(q)] == 0.0)
        continue;
      double cov = 0.0;
      for (const auto& row : normalized)
        cov += (row[static_cast<std::size_t>(p)] - mean[static_cast<std::size_t>(p)]) *
               (row[static_cast<std::size_t>(q)] - mean[static_cast<std::size_t>(q)]);
      double r = cov / std::sqrt(var[static_cast<std::size_t>(p)] * var[static_cast<std::size_t>(q)]);
      r = std::clamp(r, -1.0, 1.0);
      matrix.r[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = r;
      matrix.r[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)] = r;
    }
  }
  return matrix;
}

TotalDistribution per_session_total_distribution(const std::vector<long>& session_totals) {
  TotalDistribution dist;
  dist.total_sessions = static_cast<long>(session_totals.size());
  for (long total : session_totals) {
    int band;
    if (total <= 0)
      band = 0;
    else if (total <= 10)
      band = 1;
    else if (total <= 30)
      band = 2;
    else if (total <= 50)
      band = 3;
    else if (total <= 100)
      band = 4;
    else if (total <= 200)
      band = 5;
    else
      band = 6;
    dist.sessions[static_cast<std::size_t>(band)] += 1;
  }
  return dist;
}

}  // namespace tracemine
