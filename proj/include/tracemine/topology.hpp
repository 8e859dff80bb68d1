#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tracemine/detectors.hpp"
#include "tracemine/trace_model.hpp"

namespace tracemine {

/// Directed transition graph over command types within one segment.
struct TransitionGraph {
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, long> edges;
  int sequence_length = 0;  // tool invocations (steps with a nonempty command)
};

/// First whitespace-delimited token of the command, lowercased; "<none>" for
/// an empty command.
std::string base_command(std::string_view command);

/// Command-type sequence of a segment (steps with empty commands excluded).
std::vector<std::string> command_sequence(std::span<const AssistantStep> segment);

TransitionGraph build_graph(std::span<const AssistantStep> segment);

struct TopologyMetrics {
  int diversity = 0;
  int length = 0;
  int max_depth = 0;
  int max_fanout = 0;
  bool has_cycle = false;
  double transition_entropy = 0.0;
};

TopologyMetrics topology_metrics(const TransitionGraph& graph,
                                 std::span<const AssistantStep> segment);

/// Cycle check via depth-first traversal; self-loops count.
bool graph_has_cycle(const TransitionGraph& graph);

struct TopologyAggregate {
  long count = 0;
  double diversity_mean = 0.0;
  double length_mean = 0.0;
  double depth_mean = 0.0;
  double fanout_mean = 0.0;
  double cycles_pct = 0.0;
  double entropy_mean = 0.0;
};

std::map<Pattern, TopologyAggregate> aggregate_topology(
    const std::vector<std::pair<Pattern, TopologyMetrics>>& instances);

/// "from,to,count" per line, edges in lexicographic order.
std::string graph_to_edge_list(const TransitionGraph& graph);

}  // namespace tracemine
