#include "tracemine/topology.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tracemine/lexicon.hpp"

namespace tracemine {

std::string base_command(std::string_view command) {
  std::size_t b = command.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "<none>";
  std::size_t e = command.find_first_of(" \t", b);
  std::string_view token =
      command.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b);
  return to_lower_copy(token);
}

std::vector<std::string> command_sequence(std::span<const AssistantStep> segment) {
  std::vector<std::string> seq;
  for (const auto& step : segment)
    if (!step.command.empty()) seq.push_back(base_command(step.command));
  return seq;
}

TransitionGraph build_graph(std::span<const AssistantStep> segment) {
  TransitionGraph graph;
  std::vector<std::string> seq = command_sequence(segment);
  graph.sequence_length = static_cast<int>(seq.size());
  for (const auto& cmd : seq) graph.nodes.insert(cmd);
  for (std::size_t i = 1; i < seq.size(); ++i) graph.edges[{seq[i - 1], seq[i]}] += 1;
  return graph;
}

bool graph_has_cycle(const TransitionGraph& graph) {
  // Colored DFS over the successor lists; a gray-to-gray edge closes a cycle.
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& [edge, count] : graph.edges) {
    (void)count;
    if (edge.first == edge.second) return true;  // self-loop
    succ[edge.first].push_back(edge.second);
  }
  enum class Color { White, Gray, Black };
  std::map<std::string, Color> color;
  for (const auto& node : graph.nodes) color[node] = Color::White;

  struct Frame {
    const std::string* node;
    std::size_t next = 0;
  };
  for (const auto& start : graph.nodes) {
    if (color[start] != Color::White) continue;
    std::vector<Frame> stack{{&start}};
    color[start] = Color::Gray;
    while (!stack.empty()) {
      Frame& frame = stack.back();
      const auto& children = succ[*frame.node];
      if (frame.next < children.size()) {
        const std::string& child = children[frame.next++];
        if (color[child] == Color::Gray) return true;
        if (color[child] == Color::White) {
          color[child] = Color::Gray;
          stack.push_back({&child});
        }
      } else {
        color[*frame.node] = Color::Black;
        stack.pop_back();
      }
    }
  }
  return false;
}

TopologyMetrics topology_metrics(const TransitionGraph& graph,
                                 std::span<const AssistantStep> segment) {
  TopologyMetrics m;
  m.diversity = static_cast<int>(graph.nodes.size());
  m.length = graph.sequence_length;

  std::vector<std::string> seq = command_sequence(segment);
  int run = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    run = (i > 0 && seq[i] == seq[i - 1]) ? run + 1 : 1;
    m.max_depth = std::max(m.max_depth, run);
  }

  std::map<std::string, std::set<std::string>> successors;
  std::map<std::string, long> out_total;
  long total_transitions = 0;
  for (const auto& [edge, count] : graph.edges) {
    successors[edge.first].insert(edge.second);
    out_total[edge.first] += count;
    total_transitions += count;
  }
  for (const auto& [node, succ] : successors)
    m.max_fanout = std::max(m.max_fanout, static_cast<int>(succ.size()));

  m.has_cycle = graph_has_cycle(graph);

  if (total_transitions > 0) {
    double entropy = 0.0;
    for (const auto& [node, total] : out_total) {
      double h = 0.0;
      for (const auto& succ : successors[node]) {
        long c = graph.edges.at({node, succ});
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
      }
      double weight = static_cast<double>(total) / static_cast<double>(total_transitions);
      entropy += weight * h;
    }
    m.transition_entropy = entropy;
  }
  return m;
}

std::map<Pattern, TopologyAggregate> aggregate_topology(
    const std::vector<std::pair<Pattern, TopologyMetrics>>& instances) {
  std::map<Pattern, TopologyAggregate> out;
  std::map<Pattern, long> cycles;
  for (const auto& [pattern, m] : instances) {
    TopologyAggregate& agg = out[pattern];
    agg.count += 1;
    agg.diversity_mean += m.diversity;
    agg.length_mean += m.length;
    agg.depth_mean += m.max_depth;
    agg.fanout_mean += m.max_fanout;
    agg.entropy_mean += m.transition_entropy;
    if (m.has_cycle) cycles[pattern] += 1;
  }
  for (auto& [pattern, agg] : out) {
    const auto n = static_cast<double>(agg.count);
    agg.diversity_mean /= n;
    agg.length_mean /= n;
    agg.depth_mean /= n;
    agg.fanout_mean /= n;
    agg.entropy_mean /= n;
    agg.cycles_pct = 100.0 * static_cast<double>(cycles[pattern]) / n;
  }
  return out;
}

std::string graph_to_edge_list(const TransitionGraph& graph) {
  std::ostringstream out;
  for (const auto& [edge, count] : graph.edges)
    out << edge.first << ',' << edge.second << ',' << count << '\n';
  return out.str();
}

}  // namespace tracemine
