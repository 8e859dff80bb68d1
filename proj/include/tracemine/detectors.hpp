#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tracemine/lexicon.hpp"
#include "tracemine/trace_model.hpp"

namespace tracemine {

enum class Pattern { P1, P2, P3, P4 };

inline constexpr std::array<Pattern, 4> kAllPatterns = {Pattern::P1, Pattern::P2,
                                                        Pattern::P3, Pattern::P4};

std::string_view pattern_name(Pattern p);                      // "P1".."P4"
std::optional<Pattern> pattern_from_name(std::string_view s);  // accepts "p1"/"P1"
inline int pattern_index(Pattern p) { return static_cast<int>(p); }

/// Detection thresholds. Defaults follow the reference procedure; every value
/// can be overridden through a thresholds file for sensitivity studies.
struct DetectorConfig {
  int p1_min_span_after_prune = 20;
  int p2_min_cont = 5;
  int p2_min_span = 10;
  int p3_min_gap = 1;
  int p4_min_features = 3;
  int evidence_chars = 500;
  int backtrack_entity_gap = 10;  // metric R: "seen >= this many steps earlier"
  int p4_segment_window = 6;      // fixed segment length for P4 instances

  bool operator==(const DetectorConfig&) const = default;
};

struct P1Details {
  int prune_step = 0;
  int span_after_prune = 0;
  std::string evidence_multi;
  std::string evidence_prune;
  bool operator==(const P1Details&) const = default;
};

struct P2Details {
  int cont_count = 0;
  int alt_count = 0;
  int contrad_count = 0;
  int span = 0;
  bool operator==(const P2Details&) const = default;
};

struct P3Details {
  int deferred_step = 0;
  std::optional<int> mat_step;
  int bt_step = 0;
  int span = 0;
  bool new_evidence = false;
  bool impasse = false;
  bool operator==(const P3Details&) const = default;
};

struct P4Details {
  int feature_count = 0;
  std::string justif_snippet;
  EntitySet keywords;
  bool operator==(const P4Details&) const = default;
};

/// One detected occurrence. start_step/end_step are the instance's segment
/// bounds in assistant step positions, inclusive.
struct PatternInstance {
  Pattern pattern = Pattern::P1;
  std::string session_id;
  int anchor_step = 0;
  int start_step = 0;
  int end_step = 0;
  std::variant<P1Details, P2Details, P3Details, P4Details> details;

  /// Throws InvariantViolation if the instance breaks its pattern's
  /// threshold invariant or the bound ordering.
  void validate(const DetectorConfig& config) const;

  bool operator==(const PatternInstance&) const = default;
};

nlohmann::json instance_to_json(const PatternInstance& inst);
PatternInstance instance_from_json(const nlohmann::json& j);

std::vector<PatternInstance> detect_p1(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon,
                                       const DetectorConfig& config = {});
std::vector<PatternInstance> detect_p2(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon,
                                       const DetectorConfig& config = {});
std::vector<PatternInstance> detect_p3(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon,
                                       const DetectorConfig& config = {});
std::vector<PatternInstance> detect_p4(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon,
                                       const DetectorConfig& config = {});

/// All four detectors over one session; output sorted by (anchor_step,
/// pattern) with session_id filled in and every instance validated.
std::vector<PatternInstance> detect_all(const Session& session, const Lexicon& lexicon,
                                        const DetectorConfig& config = {},
                                        const std::set<Pattern>& enabled = {
                                            Pattern::P1, Pattern::P2, Pattern::P3, Pattern::P4});

}  // namespace tracemine
