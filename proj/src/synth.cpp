#include "tracemine/synth.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tracemine/errors.hpp"

namespace tracemine::synth {

namespace {

// Synthesis targets the default thresholds; custom-threshold studies should
// plant accordingly.
const DetectorConfig kConfig{};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 1));
}

enum class TemplateRole {
  P1Multi,
  P1Prune,
  P2Select,
  P2Cont,
  P3Deferred,
  P3Dev,
  P3Bt,
};

struct TemplateDef {
  TemplateRole role;
  std::vector<std::string> variants;  // "{}" is the entity placeholder
  std::vector<SignalKind> required;
  std::vector<SignalKind> allowed;  // may match without consequence
};

const std::vector<TemplateDef>& template_bank() {
  static const std::vector<TemplateDef> bank = {
      {TemplateRole::P1Multi,
       {"There are multiple locations around {} that deserve a look.",
        "Several branches fan out near {} in this region.",
        "I count three paths through {} here."},
       {SignalKind::MultiPath},
       {}},
      {TemplateRole::P1Prune,
       {"It is safe to skip the remaining branches; {} stays in scope.",
        "The rest is irrelevant here; only {} matters.",
        "Discarding the side routes; {} remains the lead."},
       {SignalKind::Prune},
       {}},
      {TemplateRole::P2Select,
       {"I will analyze {} closely from here.", "Let me trace {} step by step.",
        "I commit to {} as the working route."},
       {SignalKind::PathSelection},
       {}},
      {TemplateRole::P2Cont,
       {"Continuing with {} as planned.", "Still tracing {} through this block.",
        "The work on {} carries on with the same traversal."},
       {},
       {SignalKind::ContinuationContext}},
      {TemplateRole::P3Deferred,
       {"I note a few leads worth considering later, including {}.",
        "Keeping {} in the candidate pool for now.",
        "Deferring {} until the current route is done."},
       {SignalKind::MultiCandidates},
       {}},
      {TemplateRole::P3Dev,
       {"Time to dig into {} in earnest.", "Taking a deep dive into {} now.",
        "I drill into {} for the details."},
       {SignalKind::Development},
       {}},
      {TemplateRole::P3Bt,
       {"Let me go back to {} now.", "I come back to {} after the detour.",
        "Going back to {}; that lead is still open."},
       {SignalKind::Backtracking},
       {SignalKind::Revisit}},
  };
  return bank;
}

struct FeatureSentence {
  P4Feature feature;
  SignalKind kind;
  std::string sentence;
};

const std::vector<FeatureSentence>& feature_sentences() {
  static const std::vector<FeatureSentence> bank = {
      {P4Feature::Analogy, SignalKind::Analogy, "This resembles a known pattern around {}."},
      {P4Feature::Priority, SignalKind::Priority, "The highest priority target is {}."},
      {P4Feature::SignalScore, SignalKind::SignalScore, "The {} function is a dangerous sink."},
      {P4Feature::PartialEvidence, SignalKind::PartialEvidence,
       "So far the evidence around {} is partial."},
      {P4Feature::Justification, SignalKind::Justification,
       "Because {} handles raw input directly."},
      {P4Feature::Select, SignalKind::Select, "I should examine {} first."},
  };
  return bank;
}

const std::vector<std::string>& filler_bank() {
  static const std::vector<std::string> bank = {
      "The output is consistent with what the prior step showed.",
      "Reading the block of disassembly output in order.",
      "The header fields line up with the usual layout.",
      "Stepping through the listing to map the control flow.",
      "That region holds plain data by the look of it.",
      "The table of strings did not add anything here.",
      "The register usage in this routine is ordinary.",
      "Noting the offsets in this area as read.",
  };
  return bank;
}

const std::vector<std::string>& command_bank() {
  static const std::vector<std::string> bank = {
      "i",
      "afl",
      "iz",
      "is~main",
      "pdf @fcn.0000b208",
      "pdf @sym.entry0",
      "pd 20 @ 0xb428",
      "pd -10 @ 0xdf54",
      "axt @@ sym.imp.doSystemCmd",
      "pdg @ fcn.0000b514",
  };
  return bank;
}

// Kinds that change some detector's behavior no matter whose step they land
// on; planted and filler text may match them only when required to.
constexpr SignalKind kStrictKinds[] = {
    SignalKind::MultiPath,       SignalKind::Prune,
    SignalKind::PathSelection,   SignalKind::AlternativeMentioned,
    SignalKind::ContradictionAbsorbed, SignalKind::GlobalReevaluation,
    SignalKind::MultiCandidates, SignalKind::Development,
    SignalKind::Backtracking,    SignalKind::Analogy,
    SignalKind::SignalScore,
};

constexpr SignalKind kP4OnlyKinds[] = {
    SignalKind::Priority,
    SignalKind::PartialEvidence,
    SignalKind::Justification,
    SignalKind::Select,
};

std::string instantiate(std::string_view tmpl, std::string_view entity) {
  std::string out;
  std::size_t pos = tmpl.find("{}");
  out.append(tmpl.substr(0, pos));
  out.append(entity);
  out.append(tmpl.substr(pos + 2));
  return out;
}

bool contains_kind(const std::vector<SignalKind>& kinds, SignalKind k) {
  return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

// Planted text must match exactly its required behavior-bearing kinds and
// carry exactly the plant's entity.
void screen_text(const std::string& text, const std::vector<SignalKind>& required,
                 const std::vector<SignalKind>& allowed, const std::string& entity_tag,
                 const Lexicon& lexicon) {
  std::string lower = to_lower_copy(text);
  for (SignalKind kind : kStrictKinds) {
    bool want = contains_kind(required, kind);
    bool got = lexicon.matches_lower(kind, lower);
    if (want && !got)
      throw LexiconError("synthesis template does not match required signal '" +
                         std::string(signal_kind_name(kind)) + "': " + text);
    if (!want && got && !contains_kind(allowed, kind))
      throw LexiconError("synthesis template accidentally matches signal '" +
                         std::string(signal_kind_name(kind)) + "': " + text);
  }
  EntitySet expected;
  if (!entity_tag.empty()) expected = extract_semantic_entities(entity_tag);
  if (!(extract_semantic_entities(text) == expected))
    throw LexiconError("synthesis template entity extraction mismatch: " + text);
}

std::string pick_template(TemplateRole role, const std::string& entity, const Lexicon& lexicon,
                          std::mt19937_64& rng) {
  for (const auto& def : template_bank()) {
    if (def.role != role) continue;
    std::vector<std::size_t> order(def.variants.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      std::string text = instantiate(def.variants[idx], entity);
      try {
        screen_text(text, def.required, def.allowed, entity, lexicon);
        return text;
      } catch (const LexiconError&) {
        // try the next variant
      }
    }
    throw LexiconError("no synthesis template for role survives the active lexicon");
  }
  throw LexiconError("unknown template role");
}

struct P4Composition {
  std::string text;
  std::size_t justif_offset = std::string::npos;
};

P4Composition compose_p4(const std::vector<P4Feature>& features, const std::string& entity,
                         const Lexicon& lexicon) {
  P4Composition comp;
  for (const auto& fs : feature_sentences()) {
    if (std::find(features.begin(), features.end(), fs.feature) == features.end()) continue;
    if (!comp.text.empty()) comp.text += ' ';
    if (fs.feature == P4Feature::Justification) comp.justif_offset = comp.text.size();
    comp.text += instantiate(fs.sentence, entity);
  }

  std::string lower = to_lower_copy(comp.text);
  for (SignalKind kind : kStrictKinds) {
    bool want = kind == SignalKind::Analogy
                    ? std::find(features.begin(), features.end(), P4Feature::Analogy) !=
                          features.end()
                : kind == SignalKind::SignalScore
                    ? std::find(features.begin(), features.end(), P4Feature::SignalScore) !=
                          features.end()
                    : false;
    if (lexicon.matches_lower(kind, lower) != want)
      throw LexiconError("composed prioritization step has wrong signal profile: " + comp.text);
  }
  for (const auto& fs : feature_sentences()) {
    bool want = std::find(features.begin(), features.end(), fs.feature) != features.end();
    if (fs.kind == SignalKind::Analogy || fs.kind == SignalKind::SignalScore) continue;
    if (lexicon.matches_lower(fs.kind, lower) != want)
      throw LexiconError("composed prioritization step has wrong feature profile: " + comp.text);
  }
  if (!(extract_semantic_entities(comp.text) == extract_semantic_entities(entity)))
    throw LexiconError("composed prioritization step entity mismatch: " + comp.text);
  return comp;
}

std::string pick_filler(const Lexicon& lexicon, std::mt19937_64& rng) {
  // Filler is screened against the active lexicon so custom lexicons keep the
  // neutral-filler property.
  std::vector<const std::string*> usable;
  for (const auto& phrase : filler_bank()) {
    std::string lower = to_lower_copy(phrase);
    bool clean = extract_semantic_entities(phrase).empty();
    for (SignalKind kind : kStrictKinds)
      clean = clean && !lexicon.matches_lower(kind, lower);
    for (SignalKind kind : kP4OnlyKinds)
      clean = clean && !lexicon.matches_lower(kind, lower);
    if (clean) usable.push_back(&phrase);
  }
  if (usable.empty())
    throw LexiconError("no neutral filler phrase survives the active lexicon");
  return *usable[rng() % usable.size()];
}

std::string make_entity_tag(int index) {
  if (index % 2 == 0) return "sym.lead_" + std::to_string(index);
  std::ostringstream out;
  out << "0x" << std::hex << (0x5a000 + index);
  return out.str();
}

std::string json_escape_dump(const std::string& s) {
  return nlohmann::json(s).dump();
}

}  // namespace

int PlantSpec::anchor() const {
  switch (pattern) {
    case Pattern::P1: return std::get<P1Plant>(params).prune;
    case Pattern::P2: return std::get<P2Plant>(params).start;
    case Pattern::P3: return std::get<P3Plant>(params).bt;
    case Pattern::P4: return std::get<P4Plant>(params).step;
  }
  return 0;
}

std::vector<int> PlantSpec::trigger_steps() const {
  switch (pattern) {
    case Pattern::P1: {
      const auto& p = std::get<P1Plant>(params);
      return {p.start, p.prune};
    }
    case Pattern::P2: {
      const auto& p = std::get<P2Plant>(params);
      std::vector<int> steps{p.start};
      steps.insert(steps.end(), p.cont_positions.begin(), p.cont_positions.end());
      return steps;
    }
    case Pattern::P3: {
      const auto& p = std::get<P3Plant>(params);
      return {p.deferred, p.mat, p.bt};
    }
    case Pattern::P4:
      return {std::get<P4Plant>(params).step};
  }
  return {};
}

std::vector<PatternInstance> expected_instances(const std::vector<PlantSpec>& plants,
                                                int n_assistant, std::string_view session_id) {
  std::vector<PatternInstance> expected;

  // Every planted development step materializes its own path; backtracks
  // record the latest materialization anywhere before them.
  std::vector<int> all_mats;
  for (const auto& plant : plants)
    if (plant.pattern == Pattern::P3) all_mats.push_back(std::get<P3Plant>(plant.params).mat);

  for (const auto& plant : plants) {
    PatternInstance inst;
    inst.pattern = plant.pattern;
    inst.session_id = std::string(session_id);
    switch (plant.pattern) {
      case Pattern::P1: {
        const auto& p = std::get<P1Plant>(plant.params);
        int span_after = n_assistant - p.prune;
        if (span_after < kConfig.p1_min_span_after_prune) continue;
        inst.start_step = p.start;
        inst.anchor_step = p.prune;
        inst.end_step = p.prune;
        inst.details = P1Details{p.prune, span_after, "", ""};
        break;
      }
      case Pattern::P2: {
        const auto& p = std::get<P2Plant>(plant.params);
        int cnt = 0;
        std::optional<std::pair<int, int>> emission;  // (end step, cont count)
        for (int pos : p.cont_positions) {
          ++cnt;
          if (cnt >= kConfig.p2_min_cont && pos - p.start >= kConfig.p2_min_span) {
            emission = {pos, cnt};
            break;
          }
        }
        if (!emission) continue;
        inst.start_step = p.start;
        inst.anchor_step = p.start;
        inst.end_step = emission->first;
        inst.details = P2Details{emission->second, 0, 0, emission->first - p.start};
        break;
      }
      case Pattern::P3: {
        const auto& p = std::get<P3Plant>(plant.params);
        if (p.bt - p.deferred < kConfig.p3_min_gap) continue;
        std::optional<int> mat_step;
        for (int m : all_mats)
          if (m < p.bt && (!mat_step || m > *mat_step)) mat_step = m;
        inst.start_step = p.deferred;
        inst.anchor_step = p.bt;
        inst.end_step = p.bt;
        inst.details = P3Details{p.deferred, mat_step, p.bt, p.bt - p.deferred, false, false};
        break;
      }
      case Pattern::P4: {
        const auto& p = std::get<P4Plant>(plant.params);
        auto has = [&](P4Feature f) {
          return std::find(p.features.begin(), p.features.end(), f) != p.features.end();
        };
        bool core = has(P4Feature::Analogy) || has(P4Feature::SignalScore);
        bool decision = has(P4Feature::Select) || has(P4Feature::Priority);
        int count = static_cast<int>(p.features.size());
        if (!((core && decision) || (count >= kConfig.p4_min_features && core))) continue;
        inst.start_step = p.step;
        inst.anchor_step = p.step;
        inst.end_step = std::min(p.step + kConfig.p4_segment_window - 1, n_assistant - 1);
        P4Details details;
        details.feature_count = count;
        details.keywords = extract_semantic_entities(plant.entity_tag);
        inst.details = std::move(details);
        break;
      }
    }
    expected.push_back(std::move(inst));
  }

  std::sort(expected.begin(), expected.end(),
            [](const PatternInstance& a, const PatternInstance& b) {
              if (a.anchor_step != b.anchor_step) return a.anchor_step < b.anchor_step;
              return a.pattern < b.pattern;
            });
  return expected;
}

SynthResult generate_session(int length, std::vector<PlantSpec> plants, std::uint64_t seed,
                             const Lexicon& lexicon, std::string_view session_id) {
  if (length < 1) throw InfeasiblePlant("session length must be positive");

  // Placement validation: triggers in range and distinct, per-plant ordering,
  // P1 windows non-interleaved, every plant able to produce its instance.
  std::set<int> trigger_set;
  std::vector<std::pair<int, int>> p1_windows;
  for (const auto& plant : plants) {
    for (int step : plant.trigger_steps()) {
      if (step < 0 || step >= length)
        throw InfeasiblePlant("plant trigger step outside the session");
      if (!trigger_set.insert(step).second)
        throw InfeasiblePlant("plants overlap at step " + std::to_string(step));
    }
    switch (plant.pattern) {
      case Pattern::P1: {
        const auto& p = std::get<P1Plant>(plant.params);
        if (p.start >= p.prune) throw InfeasiblePlant("pruning must follow the multi-path step");
        if (length - p.prune < kConfig.p1_min_span_after_prune)
          throw InfeasiblePlant("post-prune span does not fit the session");
        p1_windows.emplace_back(p.start, p.prune);
        break;
      }
      case Pattern::P2: {
        const auto& p = std::get<P2Plant>(plant.params);
        int prev = p.start;
        for (int pos : p.cont_positions) {
          if (pos <= prev) throw InfeasiblePlant("continuation steps must be increasing");
          prev = pos;
        }
        int cnt = 0;
        bool emits = false;
        for (int pos : p.cont_positions) {
          ++cnt;
          if (cnt >= kConfig.p2_min_cont && pos - p.start >= kConfig.p2_min_span) {
            emits = true;
            break;
          }
        }
        if (!emits) throw InfeasiblePlant("lock-in plant would never reach its thresholds");
        break;
      }
      case Pattern::P3: {
        const auto& p = std::get<P3Plant>(plant.params);
        if (!(p.deferred < p.mat && p.mat < p.bt))
          throw InfeasiblePlant("deferred/development/backtrack steps must be ordered");
        break;
      }
      case Pattern::P4: {
        const auto& p = std::get<P4Plant>(plant.params);
        auto has = [&](P4Feature f) {
          return std::find(p.features.begin(), p.features.end(), f) != p.features.end();
        };
        bool core = has(P4Feature::Analogy) || has(P4Feature::SignalScore);
        bool decision = has(P4Feature::Select) || has(P4Feature::Priority);
        if (!((core && decision) ||
              (static_cast<int>(p.features.size()) >= kConfig.p4_min_features && core)))
          throw InfeasiblePlant("prioritization plant would not fire");
        break;
      }
    }
  }
  std::sort(p1_windows.begin(), p1_windows.end());
  for (std::size_t i = 1; i < p1_windows.size(); ++i) {
    if (p1_windows[i].first <= p1_windows[i - 1].second)
      throw InfeasiblePlant("pruning plants must not interleave");
  }

  std::mt19937_64 rng(seed);

  // Compose the planted thoughts.
  std::vector<std::string> thoughts(static_cast<std::size_t>(length));
  std::vector<std::size_t> justif_offsets(static_cast<std::size_t>(length), std::string::npos);
  for (const auto& plant : plants) {
    switch (plant.pattern) {
      case Pattern::P1: {
        const auto& p = std::get<P1Plant>(plant.params);
        thoughts[static_cast<std::size_t>(p.start)] =
            pick_template(TemplateRole::P1Multi, plant.entity_tag, lexicon, rng);
        thoughts[static_cast<std::size_t>(p.prune)] =
            pick_template(TemplateRole::P1Prune, plant.entity_tag, lexicon, rng);
        break;
      }
      case Pattern::P2: {
        const auto& p = std::get<P2Plant>(plant.params);
        thoughts[static_cast<std::size_t>(p.start)] =
            pick_template(TemplateRole::P2Select, plant.entity_tag, lexicon, rng);
        for (int pos : p.cont_positions)
          thoughts[static_cast<std::size_t>(pos)] =
              pick_template(TemplateRole::P2Cont, plant.entity_tag, lexicon, rng);
        break;
      }
      case Pattern::P3: {
        const auto& p = std::get<P3Plant>(plant.params);
        thoughts[static_cast<std::size_t>(p.deferred)] =
            pick_template(TemplateRole::P3Deferred, plant.entity_tag, lexicon, rng);
        thoughts[static_cast<std::size_t>(p.mat)] =
            pick_template(TemplateRole::P3Dev, plant.entity_tag, lexicon, rng);
        thoughts[static_cast<std::size_t>(p.bt)] =
            pick_template(TemplateRole::P3Bt, plant.entity_tag, lexicon, rng);
        break;
      }
      case Pattern::P4: {
        const auto& p = std::get<P4Plant>(plant.params);
        P4Composition comp = compose_p4(p.features, plant.entity_tag, lexicon);
        thoughts[static_cast<std::size_t>(p.step)] = comp.text;
        justif_offsets[static_cast<std::size_t>(p.step)] = comp.justif_offset;
        break;
      }
    }
  }
  for (auto& thought : thoughts)
    if (thought.empty()) thought = pick_filler(lexicon, rng);

  // Assemble the JSONL trace and parse it back through the front door.
  const auto& commands = command_bank();
  std::ostringstream out;
  out << "{\"role\": \"context_reset\", \"type\": \"context_reset\", \"content\": "
      << json_escape_dump("New analysis context. Current file being analyzed is: " +
                          std::string(session_id) +
                          ".bin. Goal: identify exploitation chains from untrusted inputs.")
      << "}\n";
  for (int i = 0; i < length; ++i) {
    const std::string& command = commands[rng() % commands.size()];
    out << "{\"role\": \"assistant\", \"thought\": "
        << json_escape_dump(thoughts[static_cast<std::size_t>(i)])
        << ", \"action\": \"r2\", \"command\": " << json_escape_dump(command)
        << ", \"status\": \"continue\"}\n";
    out << "{\"role\": \"tool\", \"type\": \"tool_result\", \"tool\": \"r2\", \"command\": "
        << json_escape_dump(command) << ", \"result\": \"ok (output elided)\"}\n";
  }

  SynthResult result;
  result.session = parse_session(out.str(), session_id);
  result.truth.session_id = std::string(session_id);
  result.truth.expected = expected_instances(plants, length, session_id);

  // Patch free-text evidence the plant-level oracle cannot know.
  for (auto& inst : result.truth.expected) {
    if (inst.pattern == Pattern::P1) {
      auto& d = std::get<P1Details>(inst.details);
      d.evidence_multi = thoughts[static_cast<std::size_t>(inst.start_step)].substr(
          0, static_cast<std::size_t>(kConfig.evidence_chars));
      d.evidence_prune = thoughts[static_cast<std::size_t>(d.prune_step)].substr(
          0, static_cast<std::size_t>(kConfig.evidence_chars));
    } else if (inst.pattern == Pattern::P4) {
      auto& d = std::get<P4Details>(inst.details);
      const std::string& text = thoughts[static_cast<std::size_t>(inst.anchor_step)];
      std::size_t offset = justif_offsets[static_cast<std::size_t>(inst.anchor_step)];
      if (offset == std::string::npos) offset = 0;
      d.justif_snippet = text.substr(offset, static_cast<std::size_t>(kConfig.evidence_chars));
    }
  }
  result.truth.plants = std::move(plants);
  return result;
}

std::vector<PlantSpec> plan_plants(int length, const std::array<int, 4>& counts,
                                   std::uint64_t seed) {
  const int k1 = counts[0], k2 = counts[1], k3 = counts[2], k4 = counts[3];
  const long slots = 2L * k1 + 6L * k2 + 3L * k3 + k4;
  if (slots > length)
    throw InfeasiblePlant("plants need " + std::to_string(slots) + " trigger steps, session has " +
                          std::to_string(length));

  for (int attempt = 0; attempt < 8; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::set<int> free;
    for (int i = 0; i < length; ++i) free.insert(i);

    auto take = [&](int step) { free.erase(step); };
    auto next_free = [&](int from) -> std::optional<int> {
      auto it = free.lower_bound(from);
      if (it == free.end()) return std::nullopt;
      return *it;
    };
    auto random_free = [&]() -> std::optional<int> {
      if (free.empty()) return std::nullopt;
      auto it = free.begin();
      std::advance(it, static_cast<long>(rng() % free.size()));
      return *it;
    };

    std::vector<PlantSpec> plants;
    int tag_index = 0;
    bool failed = false;

    // Early pruning plants own disjoint strides so prune signals cannot
    // attach to a neighbor's candidate.
    if (k1 > 0) {
      int limit = length - kConfig.p1_min_span_after_prune;
      int stride = limit / k1;
      if (stride < 2) throw InfeasiblePlant("session too short for the pruning plants");
      for (int i = 0; i < k1 && !failed; ++i) {
        int lo = i * stride;
        int hi = lo + stride - 1;
        int start = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(stride - 1));
        int max_gap = std::min(6, hi - start);
        int gap = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, max_gap)));
        int prune = start + gap;
        take(start);
        take(prune);
        PlantSpec plant;
        plant.pattern = Pattern::P1;
        plant.params = P1Plant{start, prune};
        plant.entity_tag = make_entity_tag(tag_index++);
        plants.push_back(std::move(plant));
      }
    }

    for (int i = 0; i < k2 && !failed; ++i) {
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed; ++tries) {
        auto start = random_free();
        if (!start || *start + kConfig.p2_min_span >= length) continue;
        std::vector<int> picks{*start};
        int cursor = *start;
        bool ok = true;
        for (int c = 0; c < kConfig.p2_min_cont - 1 && ok; ++c) {
          auto pos = next_free(cursor + 1 + static_cast<int>(rng() % 2));
          if (!pos)
            ok = false;
          else {
            picks.push_back(*pos);
            cursor = *pos;
          }
        }
        if (ok) {
          auto last = next_free(std::max(*start + kConfig.p2_min_span, cursor + 1));
          if (!last)
            ok = false;
          else
            picks.push_back(*last);
        }
        if (!ok) continue;
        for (int step : picks) take(step);
        PlantSpec plant;
        plant.pattern = Pattern::P2;
        plant.params = P2Plant{picks[0], {picks.begin() + 1, picks.end()}};
        plant.entity_tag = make_entity_tag(tag_index++);
        plants.push_back(std::move(plant));
        placed = true;
      }
      if (!placed) failed = true;
    }

    for (int i = 0; i < k3 && !failed; ++i) {
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed; ++tries) {
        auto deferred = random_free();
        if (!deferred) break;
        auto mat = next_free(*deferred + 1 + static_cast<int>(rng() % 3));
        if (!mat) continue;
        auto bt = next_free(*mat + 1 + static_cast<int>(rng() % 4));
        if (!bt) continue;
        take(*deferred);
        take(*mat);
        take(*bt);
        PlantSpec plant;
        plant.pattern = Pattern::P3;
        plant.params = P3Plant{*deferred, *mat, *bt};
        plant.entity_tag = make_entity_tag(tag_index++);
        plants.push_back(std::move(plant));
        placed = true;
      }
      if (!placed) failed = true;
    }

    for (int i = 0; i < k4 && !failed; ++i) {
      auto step = random_free();
      if (!step) {
        failed = true;
        break;
      }
      take(*step);
      PlantSpec plant;
      plant.pattern = Pattern::P4;
      // Rotate through firing feature combinations.
      static const std::vector<std::vector<P4Feature>> kCombos = {
          {P4Feature::SignalScore, P4Feature::Select},
          {P4Feature::Analogy, P4Feature::Priority},
          {P4Feature::SignalScore, P4Feature::Justification, P4Feature::Select},
          {P4Feature::Analogy, P4Feature::PartialEvidence, P4Feature::Justification},
          {P4Feature::SignalScore, P4Feature::Priority, P4Feature::PartialEvidence,
           P4Feature::Select},
      };
      plant.params = P4Plant{*step, kCombos[rng() % kCombos.size()]};
      plant.entity_tag = make_entity_tag(tag_index++);
      plants.push_back(std::move(plant));
    }

    if (!failed) return plants;
  }
  throw InfeasiblePlant("could not place all plants after several attempts");
}

namespace {

std::array<std::vector<int>, 4> largest_remainder_counts(int n_sessions, const PlantMeans& means,
                                                         std::mt19937_64& rng) {
  std::array<double, 4> mean_values{means.p1, means.p2, means.p3, means.p4};
  std::array<std::vector<int>, 4> counts;
  for (int p = 0; p < 4; ++p) {
    long total = std::lround(mean_values[static_cast<std::size_t>(p)] * n_sessions);
    int base = static_cast<int>(total / n_sessions);
    int rem = static_cast<int>(total % n_sessions);
    std::vector<int>& per_session = counts[static_cast<std::size_t>(p)];
    per_session.assign(static_cast<std::size_t>(n_sessions), base);
    std::vector<int> order(static_cast<std::size_t>(n_sessions));
    for (int i = 0; i < n_sessions; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < rem; ++i) per_session[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] += 1;
  }
  return counts;
}

std::string session_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth-%04d", index);
  return buf;
}

CorpusResult write_corpus(const std::filesystem::path& out_dir, int steps,
                          const std::vector<std::array<int, 4>>& per_session_counts,
                          std::uint64_t seed, const Lexicon& lexicon) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UnwritableOutput("cannot create " + out_dir.string() + ": " + ec.message());

  CorpusResult result;
  std::ofstream manifest(out_dir / kManifestFileName, std::ios::binary);
  if (!manifest) throw UnwritableOutput("cannot write manifest in " + out_dir.string());

  for (std::size_t s = 0; s < per_session_counts.size(); ++s) {
    std::uint64_t session_seed = derive_seed(seed, s);
    std::string sid = session_name(static_cast<int>(s));
    std::vector<PlantSpec> plants = plan_plants(steps, per_session_counts[s], session_seed);
    SynthResult synth = generate_session(steps, std::move(plants), session_seed, lexicon, sid);

    std::ofstream file(out_dir / (sid + ".jsonl"), std::ios::binary);
    if (!file) throw UnwritableOutput("cannot write session file for " + sid);
    file << serialize_session(synth.session);

    for (const auto& inst : synth.truth.expected) manifest << instance_to_json(inst).dump() << '\n';
    result.sessions.push_back(std::move(synth.truth));
  }
  result.manifest_path = out_dir / kManifestFileName;
  return result;
}

}  // namespace

CorpusResult generate_corpus(const std::filesystem::path& out_dir, int n_sessions, int steps,
                             const PlantMeans& means, std::uint64_t seed, const Lexicon& lexicon) {
  if (n_sessions < 1) throw InfeasiblePlant("corpus needs at least one session");
  std::mt19937_64 rng(derive_seed(seed, 0xC0FFEE));
  auto counts = largest_remainder_counts(n_sessions, means, rng);
  std::vector<std::array<int, 4>> per_session(static_cast<std::size_t>(n_sessions));
  for (int s = 0; s < n_sessions; ++s)
    for (int p = 0; p < 4; ++p)
      per_session[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)] =
          counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(s)];
  return write_corpus(out_dir, steps, per_session, seed, lexicon);
}

CorpusResult generate_complementary_corpus(const std::filesystem::path& out_dir, int n_sessions,
                                           int steps, int pair_total, std::uint64_t seed,
                                           const Lexicon& lexicon) {
  if (n_sessions < 2) throw InfeasiblePlant("complementary corpus needs at least two sessions");
  std::mt19937_64 rng(derive_seed(seed, 0xBEEF));
  std::vector<std::array<int, 4>> per_session(static_cast<std::size_t>(n_sessions));
  for (int s = 0; s < n_sessions; ++s) {
    double u = 0.05 + 0.9 * static_cast<double>(s) / static_cast<double>(n_sessions - 1);
    int k2 = static_cast<int>(std::lround(u * pair_total));
    k2 = std::clamp(k2, 0, pair_total);
    per_session[static_cast<std::size_t>(s)] = {static_cast<int>(rng() % 3), k2,
                                                static_cast<int>(rng() % 2), pair_total - k2};
  }
  std::shuffle(per_session.begin(), per_session.end(), rng);
  return write_corpus(out_dir, steps, per_session, seed, lexicon);
}

std::vector<PatternInstance> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest " + path.string());
  std::vector<PatternInstance> instances;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    instances.push_back(instance_from_json(nlohmann::json::parse(line)));
  }
  return instances;
}

}  // namespace tracemine::synth
