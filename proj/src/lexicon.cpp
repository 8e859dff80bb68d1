#include "tracemine/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tracemine/errors.hpp"

namespace tracemine {

namespace detail {
extern const char* const kDefaultLexiconText;  // generated from data/default_lexicon.txt
}

namespace {

struct KindName {
  SignalKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {SignalKind::Revisit, "revisit"},
    {SignalKind::MultiPath, "multi_path"},
    {SignalKind::Prune, "prune"},
    {SignalKind::PathSelection, "path_selection"},
    {SignalKind::ContinuationContext, "continuation_context"},
    {SignalKind::AlternativeMentioned, "alternative_mentioned"},
    {SignalKind::ContradictionAbsorbed, "contradiction_absorbed"},
    {SignalKind::GlobalReevaluation, "global_reevaluation"},
    {SignalKind::MultiCandidates, "multi_candidates"},
    {SignalKind::Development, "development"},
    {SignalKind::Backtracking, "backtracking"},
    {SignalKind::NewEvidence, "new_evidence"},
    {SignalKind::Impasse, "impasse"},
    {SignalKind::Analogy, "analogy"},
    {SignalKind::Priority, "priority"},
    {SignalKind::SignalScore, "signal_score"},
    {SignalKind::PartialEvidence, "partial_evidence"},
    {SignalKind::Justification, "justification"},
    {SignalKind::Select, "select"},
    {SignalKind::DecisionPoint, "decision_point"},
    {SignalKind::PruneSignal, "prune_signal"},
    {SignalKind::MultiAlternative, "multi_alternative"},
};

static_assert(std::size(kKindNames) == kSignalKindCount);

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Identifier tokens ending in these look like callables.
constexpr std::string_view kCallableSuffixes[] = {"cmd",  "func",    "entry", "exec", "handler",
                                                  "init", "proc",    "ioctl", "cgi"};

constexpr std::string_view kAdjacencyStopwords[] = {
    "function", "functions", "this",  "that",  "the",   "each",  "every", "same",
    "next",     "first",     "second", "last",  "other", "another", "which", "will",
    "should",   "could",     "would", "with",  "from",  "into",  "have",  "been",
    "what",     "when",      "where", "then",  "than"};

bool qualifies_by_suffix(std::string_view token) {
  if (token.size() < 4) return false;
  for (auto suffix : kCallableSuffixes)
    if (token.size() >= suffix.size() && token.ends_with(suffix)) return true;
  return false;
}

bool qualifies_by_adjacency(std::string_view token) {
  if (token.size() < 4) return false;
  if (std::all_of(token.begin(), token.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return false;
  for (auto stop : kAdjacencyStopwords)
    if (token == stop) return false;
  return true;
}

}  // namespace

std::string_view signal_kind_name(SignalKind kind) {
  return kKindNames[static_cast<int>(kind)].name;
}

std::optional<SignalKind> signal_kind_from_name(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  return std::nullopt;
}

std::string to_lower_copy(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool entities_overlap(const EntitySet& a, const EntitySet& b) {
  const EntitySet& small = a.entities.size() <= b.entities.size() ? a : b;
  const EntitySet& large = a.entities.size() <= b.entities.size() ? b : a;
  return std::any_of(small.entities.begin(), small.entities.end(),
                     [&](const std::string& e) { return large.contains(e); });
}

EntitySet extract_semantic_entities(std::string_view text) {
  EntitySet out;
  std::string lower = to_lower_copy(text);
  std::vector<bool> claimed(lower.size(), false);

  auto claim = [&](std::size_t pos, std::size_t len) {
    for (std::size_t i = pos; i < pos + len && i < claimed.size(); ++i) claimed[i] = true;
  };
  auto boundary_before = [&](std::size_t pos) {
    return pos == 0 || !is_ident_char(lower[pos - 1]);
  };

  // Dotted symbol tokens: sym./fcn./imp./reloc./loc. chains.
  static const std::regex kSymRe(R"((sym|fcn|imp|reloc|loc)(\.[a-z0-9_]+)+)");
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), kSymRe);
       it != std::sregex_iterator(); ++it) {
    auto pos = static_cast<std::size_t>(it->position());
    if (!boundary_before(pos)) continue;
    out.entities.insert(it->str());
    claim(pos, static_cast<std::size_t>(it->length()));
  }

  // Hex addresses, normalized to 0x-prefixed lowercase.
  static const std::regex kHexRe(R"(0x[0-9a-f]+)");
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), kHexRe);
       it != std::sregex_iterator(); ++it) {
    auto pos = static_cast<std::size_t>(it->position());
    if (claimed[pos] || !boundary_before(pos)) continue;
    out.entities.insert(it->str());
    claim(pos, static_cast<std::size_t>(it->length()));
  }

  // Identifier tokens: callable-looking suffixes, or neighbors of "function".
  struct Token {
    std::size_t pos;
    std::string text;
    bool claimed;
  };
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < lower.size()) {
    if (!is_ident_char(lower[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < lower.size() && is_ident_char(lower[i])) ++i;
    bool in_claimed = false;
    for (std::size_t k = start; k < i; ++k)
      if (claimed[k]) in_claimed = true;
    tokens.push_back({start, lower.substr(start, i - start), in_claimed});
  }
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].claimed) continue;
    bool next_to_function = false;
    if (t > 0 && (tokens[t - 1].text == "function" || tokens[t - 1].text == "functions"))
      next_to_function = true;
    if (t + 1 < tokens.size() &&
        (tokens[t + 1].text == "function" || tokens[t + 1].text == "functions"))
      next_to_function = true;
    if (qualifies_by_suffix(tokens[t].text) ||
        (next_to_function && qualifies_by_adjacency(tokens[t].text)))
      out.entities.insert(tokens[t].text);
  }
  return out;
}

const std::vector<Lexicon::Entry>& Lexicon::entries(SignalKind kind) const {
  return entries_[static_cast<int>(kind)];
}

bool Lexicon::matches_lower(SignalKind kind, std::string_view lower_text) const {
  for (const auto& entry : entries_[static_cast<int>(kind)]) {
    if (entry.is_regex) {
      if (std::regex_search(lower_text.begin(), lower_text.end(), entry.re)) return true;
    } else if (lower_text.find(entry.literal) != std::string_view::npos) {
      return true;
    }
  }
  return false;
}

bool Lexicon::matches(SignalKind kind, std::string_view text) const {
  return matches_lower(kind, to_lower_copy(text));
}

Lexicon Lexicon::parse(std::string_view text, std::string_view origin) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  int line_no = 0;
  std::optional<SignalKind> current;
  std::string where(origin);

  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    if (line.starts_with("version:")) {
      lex.version_ = trim(line.substr(8));
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      std::string name = trim(line.substr(1, line.size() - 2));
      auto kind = signal_kind_from_name(name);
      if (!kind)
        throw LexiconError(where + ":" + std::to_string(line_no) +
                           ": unknown signal kind '" + name + "'");
      current = kind;
      continue;
    }
    if (!current)
      throw LexiconError(where + ":" + std::to_string(line_no) +
                         ": entry appears before any [kind] header");
    Entry entry;
    entry.raw = line;
    if (line.starts_with("re:")) {
      entry.is_regex = true;
      try {
        entry.re = std::regex(line.substr(3),
                              std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw LexiconError(where + ":" + std::to_string(line_no) + ": bad regex: " + e.what());
      }
    } else {
      entry.literal = to_lower_copy(line);
    }
    lex.entries_[static_cast<int>(*current)].push_back(std::move(entry));
  }

  for (const auto& kn : kKindNames) {
    if (lex.entries_[static_cast<int>(kn.kind)].empty())
      throw LexiconError(where + ": signal kind '" + std::string(kn.name) +
                         "' has no entries");
  }
  return lex;
}

Lexicon Lexicon::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LexiconError("cannot open lexicon file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = Lexicon::parse(detail::kDefaultLexiconText, "<builtin>");
  return lex;
}

bool match_signal(SignalKind kind, std::string_view text, const Lexicon& lexicon) {
  if (lexicon.entries(kind).empty())
    throw UnknownSignal(std::string(signal_kind_name(kind)));
  return lexicon.matches(kind, text);
}

}  // namespace tracemine
