#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tracemine/detectors.hpp"
#include "tracemine/lexicon.hpp"
#include "tracemine/trace_model.hpp"

namespace tracemine {

/// Behavioral metrics for one pattern-aligned segment.
struct SegmentMetrics {
  int path_length = 0;           // L
  double forward_ratio = 0.0;    // F
  double branching_factor = 1.0; // B = 1 + 1.5 * (multi_alt / decision_points)
  int backtrack_count = 0;       // R
  double pruning_rate = 0.0;     // P
  int decision_points = 0;
  int multi_alt_points = 0;
  int prune_points = 0;
};

/// First occurrence of each entity over a session's assistant steps, used to
/// spot references back to earlier analysis locations.
class EntityHistory {
 public:
  static EntityHistory build(const std::vector<AssistantStep>& steps);

  /// step_pos of the first assistant step mentioning the entity.
  std::optional<int> first_seen(const std::string& entity) const;

 private:
  std::map<std::string, int> first_seen_;
};

/// Computes L, F, B, R, P over a contiguous segment. `history`, when given,
/// enables the entity-reoccurrence half of the backtrack rule; without it R
/// counts only explicit backtracking signals. Throws EmptySegment.
SegmentMetrics compute_metrics(std::span<const AssistantStep> segment, Pattern pattern,
                               const Lexicon& lexicon, const DetectorConfig& config = {},
                               const EntityHistory* history = nullptr);

struct Stats {
  double mean = 0.0;
  double median = 0.0;  // lower of the two middles for even counts
  double std_dev = 0.0; // population standard deviation
};

Stats summarize(std::vector<double> values);

struct MetricAggregate {
  long count = 0;
  Stats path_length;
  Stats forward_ratio;
  Stats branching_factor;
  Stats backtrack_count;
  double pruning_rate_mean = 0.0;  // P mean feeds the exploration/selection table
};

std::map<Pattern, MetricAggregate> aggregate_metrics(
    const std::vector<std::pair<Pattern, SegmentMetrics>>& instances);

}  // namespace tracemine
