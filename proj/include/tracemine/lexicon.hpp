#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tracemine {

/// Named text signals consumed by the detectors and segment metrics.
enum class SignalKind {
  Revisit,
  MultiPath,
  Prune,
  PathSelection,
  ContinuationContext,
  AlternativeMentioned,
  ContradictionAbsorbed,
  GlobalReevaluation,
  MultiCandidates,
  Development,
  Backtracking,
  NewEvidence,
  Impasse,
  Analogy,
  Priority,
  SignalScore,
  PartialEvidence,
  Justification,
  Select,
  DecisionPoint,
  PruneSignal,
  MultiAlternative,
};

inline constexpr int kSignalKindCount = 22;

std::string_view signal_kind_name(SignalKind kind);
std::optional<SignalKind> signal_kind_from_name(std::string_view name);

/// Normalized tokens extracted from thought text: hex addresses, dotted
/// symbols, and callable-looking identifiers.
struct EntitySet {
  std::set<std::string> entities;

  bool empty() const { return entities.empty(); }
  bool contains(const std::string& e) const { return entities.count(e) > 0; }
  bool operator==(const EntitySet&) const = default;
};

EntitySet extract_semantic_entities(std::string_view text);

bool entities_overlap(const EntitySet& a, const EntitySet& b);

std::string to_lower_copy(std::string_view text);

/// Phrase/regex lists per SignalKind. Immutable after load; every kind has
/// at least one entry.
class Lexicon {
 public:
  struct Entry {
    std::string raw;           // as written in the lexicon file
    bool is_regex = false;
    std::string literal;       // lowercased literal, when !is_regex
    std::regex re;             // compiled, when is_regex
  };

  /// The embedded default lexicon (version builtin-1).
  static const Lexicon& builtin();

  static Lexicon parse(std::string_view text, std::string_view origin = "<lexicon>");
  static Lexicon load_file(const std::filesystem::path& path);

  const std::string& version() const { return version_; }
  const std::vector<Entry>& entries(SignalKind kind) const;

  /// True iff any entry for `kind` matches the text (case-insensitive).
  bool matches(SignalKind kind, std::string_view text) const;

  /// Same, for text already lowercased (one lowering per step, many kinds).
  bool matches_lower(SignalKind kind, std::string_view lower_text) const;

 private:
  std::array<std::vector<Entry>, kSignalKindCount> entries_;
  std::string version_ = "unversioned";
};

/// Free-function form used throughout the detectors. Throws UnknownSignal if
/// the kind has no entries.
bool match_signal(SignalKind kind, std::string_view text, const Lexicon& lexicon);

}  // namespace tracemine
