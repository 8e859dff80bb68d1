#include "tracemine/behavior_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tracemine/errors.hpp"

namespace tracemine {

namespace {

constexpr double kBranchingAlpha = 1.5;

void check_ranges(const SegmentMetrics& m) {
  auto fail = [](const char* what) {
    throw InvariantViolation(std::string("segment metrics out of range: ") + what);
  };
  if (m.path_length < 1) fail("L < 1");
  if (m.forward_ratio < 0.0 || m.forward_ratio > 1.0) fail("F outside [0,1]");
  if (m.branching_factor < 1.0 || m.branching_factor > 1.0 + kBranchingAlpha)
    fail("B outside [1.0, 2.5]");
  if (m.pruning_rate < 0.0 || m.pruning_rate > 1.0) fail("P outside [0,1]");
  if (m.backtrack_count < 0) fail("R < 0");
}

}  // namespace

EntityHistory EntityHistory::build(const std::vector<AssistantStep>& steps) {
  EntityHistory history;
  for (const auto& step : steps) {
    for (const auto& entity : extract_semantic_entities(step.thought).entities)
      history.first_seen_.try_emplace(entity, step.step_pos);
  }
  return history;
}

std::optional<int> EntityHistory::first_seen(const std::string& entity) const {
  auto it = first_seen_.find(entity);
  if (it == first_seen_.end()) return std::nullopt;
  return it->second;
}

SegmentMetrics compute_metrics(std::span<const AssistantStep> segment, Pattern pattern,
                               const Lexicon& lexicon, const DetectorConfig& config,
                               const EntityHistory* history) {
  if (segment.empty()) throw EmptySegment();

  SegmentMetrics m;
  m.path_length = static_cast<int>(segment.size());

  int forward = 0;
  int backtracks = 0;
  for (const auto& step : segment) {
    if (step.status == "continue") ++forward;
    std::string lower = to_lower_copy(step.thought);

    if (lexicon.matches_lower(SignalKind::DecisionPoint, lower)) {
      m.decision_points += 1;
      if (lexicon.matches_lower(SignalKind::MultiAlternative, lower)) m.multi_alt_points += 1;
      if (lexicon.matches_lower(SignalKind::PruneSignal, lower)) m.prune_points += 1;
    }

    bool is_backtrack = lexicon.matches_lower(SignalKind::Backtracking, lower);
    if (!is_backtrack && history) {
      for (const auto& entity : extract_semantic_entities(step.thought).entities) {
        auto seen = history->first_seen(entity);
        if (seen && step.step_pos - *seen >= config.backtrack_entity_gap) {
          is_backtrack = true;
          break;
        }
      }
    }
    if (is_backtrack) ++backtracks;
  }

  m.forward_ratio = static_cast<double>(forward) / m.path_length;
  if (m.decision_points > 0) {
    double r = static_cast<double>(m.multi_alt_points) / m.decision_points;
    m.branching_factor = 1.0 + kBranchingAlpha * r;
    m.pruning_rate = static_cast<double>(m.prune_points) / m.decision_points;
  } else {
    m.branching_factor = 1.0;
    m.pruning_rate = 0.0;
  }
  m.backtrack_count = pattern == Pattern::P3 ? 1 : backtracks;

  check_ranges(m);
  return m;
}

Stats summarize(std::vector<double> values) {
  Stats s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  s.mean = 0.0;
  for (double v : values) s.mean += v;
  s.mean /= n;

  std::sort(values.begin(), values.end());
  s.median = values[(values.size() - 1) / 2];

  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(acc / n);
  return s;
}

std::map<Pattern, MetricAggregate> aggregate_metrics(
    const std::vector<std::pair<Pattern, SegmentMetrics>>& instances) {
  struct Columns {
    std::vector<double> L, F, B, R, P;
  };
  std::map<Pattern, Columns> grouped;
  for (const auto& [pattern, m] : instances) {
    Columns& c = grouped[pattern];
    c.L.push_back(m.path_length);
    c.F.push_back(m.forward_ratio);
    c.B.push_back(m.branching_factor);
    c.R.push_back(m.backtrack_count);
    c.P.push_back(m.pruning_rate);
  }

  std::map<Pattern, MetricAggregate> out;
  for (auto& [pattern, c] : grouped) {
    MetricAggregate agg;
    agg.count = static_cast<long>(c.L.size());
    agg.path_length = summarize(c.L);
    agg.forward_ratio = summarize(c.F);
    agg.branching_factor = summarize(c.B);
    agg.backtrack_count = summarize(c.R);
    agg.pruning_rate_mean = summarize(c.P).mean;
    out[pattern] = agg;
  }
  return out;
}

}  // namespace tracemine
