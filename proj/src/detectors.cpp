#include "tracemine/detectors.hpp"

#include <algorithm>

#include "tracemine/errors.hpp"

namespace tracemine {

namespace {

std::string truncate_evidence(const std::string& text, int max_chars) {
  if (static_cast<int>(text.size()) <= max_chars) return text;
  return text.substr(0, static_cast<std::size_t>(max_chars));
}

// Earliest position at which any entry of `kind` matches the lowered text.
std::optional<std::size_t> first_match_pos(const Lexicon& lexicon, SignalKind kind,
                                           const std::string& lower) {
  std::optional<std::size_t> best;
  for (const auto& entry : lexicon.entries(kind)) {
    if (entry.is_regex) {
      std::smatch m;
      if (std::regex_search(lower, m, entry.re)) {
        auto pos = static_cast<std::size_t>(m.position());
        if (!best || pos < *best) best = pos;
      }
    } else {
      auto pos = lower.find(entry.literal);
      if (pos != std::string::npos && (!best || pos < *best)) best = pos;
    }
  }
  return best;
}

}  // namespace

std::string_view pattern_name(Pattern p) {
  switch (p) {
    case Pattern::P1: return "P1";
    case Pattern::P2: return "P2";
    case Pattern::P3: return "P3";
    case Pattern::P4: return "P4";
  }
  return "?";
}

std::optional<Pattern> pattern_from_name(std::string_view s) {
  if (s.size() != 2 || (s[0] != 'P' && s[0] != 'p')) return std::nullopt;
  switch (s[1]) {
    case '1': return Pattern::P1;
    case '2': return Pattern::P2;
    case '3': return Pattern::P3;
    case '4': return Pattern::P4;
  }
  return std::nullopt;
}

void PatternInstance::validate(const DetectorConfig& config) const {
  auto fail = [&](const std::string& msg) {
    throw InvariantViolation(std::string(pattern_name(pattern)) + " instance at anchor " +
                             std::to_string(anchor_step) + ": " + msg);
  };
  if (!(start_step <= anchor_step && anchor_step <= end_step))
    fail("segment bounds out of order");
  switch (pattern) {
    case Pattern::P1: {
      const auto& d = std::get<P1Details>(details);
      if (d.span_after_prune < config.p1_min_span_after_prune)
        fail("span after prune below threshold");
      break;
    }
    case Pattern::P2: {
      const auto& d = std::get<P2Details>(details);
      if (d.cont_count < config.p2_min_cont) fail("continuation count below threshold");
      if (d.span < config.p2_min_span) fail("span below threshold");
      break;
    }
    case Pattern::P3: {
      const auto& d = std::get<P3Details>(details);
      if (d.bt_step - d.deferred_step < config.p3_min_gap)
        fail("backtrack gap below threshold");
      break;
    }
    case Pattern::P4:
      // Core-feature presence is enforced structurally by the detector; the
      // recorded feature count must cover at least the firing combination.
      if (std::get<P4Details>(details).feature_count < 1) fail("no features recorded");
      break;
  }
}

std::vector<PatternInstance> detect_p1(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon, const DetectorConfig& config) {
  struct Pending {
    int start_idx;
    EntitySet kw;
    std::string evidence_multi;
    std::optional<int> prune_idx;
    std::string evidence_prune;
  };
  std::vector<Pending> pending;

  const int n = static_cast<int>(steps.size());
  for (int i = 0; i < n; ++i) {
    const std::string& text = steps[static_cast<std::size_t>(i)].thought;
    std::string lower = to_lower_copy(text);

    if (lexicon.matches_lower(SignalKind::Revisit, lower)) {
      EntitySet keywords = extract_semantic_entities(text);
      std::erase_if(pending,
                    [&](const Pending& p) { return entities_overlap(keywords, p.kw); });
    }
    if (lexicon.matches_lower(SignalKind::MultiPath, lower)) {
      pending.push_back({i, extract_semantic_entities(text),
                         truncate_evidence(text, config.evidence_chars), std::nullopt, {}});
    }
    if (lexicon.matches_lower(SignalKind::Prune, lower)) {
      for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
        if (!it->prune_idx) {
          it->prune_idx = i;
          it->evidence_prune = truncate_evidence(text, config.evidence_chars);
          break;
        }
      }
    }
  }

  std::vector<PatternInstance> findings;
  for (const auto& p : pending) {
    if (!p.prune_idx) continue;
    int span_after = n - *p.prune_idx;
    if (span_after < config.p1_min_span_after_prune) continue;
    PatternInstance inst;
    inst.pattern = Pattern::P1;
    inst.start_step = p.start_idx;
    inst.anchor_step = *p.prune_idx;
    inst.end_step = *p.prune_idx;
    inst.details = P1Details{*p.prune_idx, span_after, p.evidence_multi, p.evidence_prune};
    findings.push_back(std::move(inst));
  }
  std::sort(findings.begin(), findings.end(),
            [](const PatternInstance& a, const PatternInstance& b) {
              return a.start_step < b.start_step;
            });
  return findings;
}

std::vector<PatternInstance> detect_p2(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon, const DetectorConfig& config) {
  struct Path {
    int start;
    EntitySet kw;
    std::string snippet;
    int cnt_cont = 0;
    int cnt_alt = 0;
    int cnt_contrad = 0;
    int last_cont = -1;
    int last_contrad = -1;
  };
  std::vector<Path> paths;
  std::vector<PatternInstance> findings;

  const int n = static_cast<int>(steps.size());
  for (int i = 0; i < n; ++i) {
    const std::string& text = steps[static_cast<std::size_t>(i)].thought;
    std::string lower = to_lower_copy(text);
    EntitySet keywords = extract_semantic_entities(text);

    if (lexicon.matches_lower(SignalKind::GlobalReevaluation, lower)) {
      std::erase_if(paths, [&](const Path& p) { return entities_overlap(keywords, p.kw); });
    }

    std::size_t created = std::string::npos;
    if (lexicon.matches_lower(SignalKind::PathSelection, lower)) {
      Path path;
      path.start = i;
      path.kw = keywords;
      path.snippet = truncate_evidence(text, config.evidence_chars);
      paths.push_back(std::move(path));
      created = paths.size() - 1;
    }

    bool alt = lexicon.matches_lower(SignalKind::AlternativeMentioned, lower);
    bool contrad = lexicon.matches_lower(SignalKind::ContradictionAbsorbed, lower);
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
      if (pi == created) continue;  // the selection step itself is not a continuation
      Path& p = paths[pi];
      if (!entities_overlap(keywords, p.kw)) continue;
      p.cnt_cont += 1;
      p.last_cont = i;
      if (alt) p.cnt_alt += 1;
      if (contrad) {
        p.cnt_contrad += 1;
        p.last_contrad = i;
      }
    }

    for (auto it = paths.begin(); it != paths.end();) {
      int end = std::max({it->last_cont, it->last_contrad, it->start});
      int span = end - it->start;
      if (it->cnt_cont >= config.p2_min_cont && span >= config.p2_min_span) {
        PatternInstance inst;
        inst.pattern = Pattern::P2;
        inst.start_step = it->start;
        inst.anchor_step = it->start;
        inst.end_step = end;
        inst.details = P2Details{it->cnt_cont, it->cnt_alt, it->cnt_contrad, span};
        findings.push_back(std::move(inst));
        it = paths.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::sort(findings.begin(), findings.end(),
            [](const PatternInstance& a, const PatternInstance& b) {
              return a.start_step < b.start_step;
            });
  return findings;
}

std::vector<PatternInstance> detect_p3(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon, const DetectorConfig& config) {
  struct Deferred {
    int m_idx;
    EntitySet kw;
    std::string snippet;
    bool mat = false;
    int mat_idx = -1;
    bool bt = false;
    int bt_idx = -1;
    std::string bt_snippet;
    bool new_evidence = false;
    bool impasse = false;
  };
  std::vector<Deferred> deferred;
  std::vector<int> materialized;  // mat step positions, in occurrence order

  const int n = static_cast<int>(steps.size());
  for (int i = 0; i < n; ++i) {
    const std::string& text = steps[static_cast<std::size_t>(i)].thought;
    std::string lower = to_lower_copy(text);
    EntitySet keywords = extract_semantic_entities(text);

    if (lexicon.matches_lower(SignalKind::MultiCandidates, lower)) {
      Deferred path;
      path.m_idx = i;
      path.kw = keywords;
      path.snippet = truncate_evidence(text, config.evidence_chars);
      deferred.push_back(std::move(path));
    }
    if (lexicon.matches_lower(SignalKind::Development, lower)) {
      for (auto& p : deferred) {
        if (entities_overlap(keywords, p.kw)) {
          p.mat = true;
          p.mat_idx = i;
          materialized.push_back(i);
          break;
        }
      }
    }
    if (lexicon.matches_lower(SignalKind::Backtracking, lower)) {
      bool nev = lexicon.matches_lower(SignalKind::NewEvidence, lower);
      bool imp = lexicon.matches_lower(SignalKind::Impasse, lower);
      for (auto& p : deferred) {
        if (p.bt || !entities_overlap(keywords, p.kw)) continue;
        p.bt = true;
        p.bt_idx = i;
        p.bt_snippet = truncate_evidence(text, config.evidence_chars);
        p.new_evidence = nev;
        p.impasse = imp;
        break;
      }
    }
  }

  std::vector<PatternInstance> findings;
  for (const auto& p : deferred) {
    if (!p.bt || p.bt_idx - p.m_idx < config.p3_min_gap) continue;
    // Latest materialization, across all deferred paths, before the backtrack.
    std::optional<int> mat_step;
    for (int m : materialized)
      if (m < p.bt_idx && (!mat_step || m > *mat_step)) mat_step = m;
    PatternInstance inst;
    inst.pattern = Pattern::P3;
    inst.start_step = p.m_idx;
    inst.anchor_step = p.bt_idx;
    inst.end_step = p.bt_idx;
    inst.details =
        P3Details{p.m_idx, mat_step, p.bt_idx, p.bt_idx - p.m_idx, p.new_evidence, p.impasse};
    findings.push_back(std::move(inst));
  }
  std::sort(findings.begin(), findings.end(),
            [](const PatternInstance& a, const PatternInstance& b) {
              return a.start_step < b.start_step;
            });
  return findings;
}

std::vector<PatternInstance> detect_p4(const std::vector<AssistantStep>& steps,
                                       const Lexicon& lexicon, const DetectorConfig& config) {
  std::vector<PatternInstance> findings;
  const int n = static_cast<int>(steps.size());
  for (int i = 0; i < n; ++i) {
    const std::string& text = steps[static_cast<std::size_t>(i)].thought;
    std::string lower = to_lower_copy(text);

    bool analogy = lexicon.matches_lower(SignalKind::Analogy, lower);
    bool priority = lexicon.matches_lower(SignalKind::Priority, lower);
    bool sig_score = lexicon.matches_lower(SignalKind::SignalScore, lower);
    bool partial = lexicon.matches_lower(SignalKind::PartialEvidence, lower);
    bool justif = lexicon.matches_lower(SignalKind::Justification, lower);
    bool select = lexicon.matches_lower(SignalKind::Select, lower);

    int feat_cnt = static_cast<int>(analogy) + static_cast<int>(priority) +
                   static_cast<int>(sig_score) + static_cast<int>(partial) +
                   static_cast<int>(justif) + static_cast<int>(select);
    bool core = analogy || sig_score;
    bool decision = select || priority;
    if (!((core && decision) || (feat_cnt >= config.p4_min_features && core))) continue;

    std::string snippet;
    if (justif) {
      auto pos = first_match_pos(lexicon, SignalKind::Justification, lower);
      snippet = truncate_evidence(text.substr(pos.value_or(0)), config.evidence_chars);
    } else {
      snippet = truncate_evidence(text, config.evidence_chars);
    }

    PatternInstance inst;
    inst.pattern = Pattern::P4;
    inst.start_step = i;
    inst.anchor_step = i;
    inst.end_step = std::min(i + config.p4_segment_window - 1, n - 1);
    inst.details = P4Details{feat_cnt, std::move(snippet), extract_semantic_entities(text)};
    findings.push_back(std::move(inst));
  }
  return findings;
}

std::vector<PatternInstance> detect_all(const Session& session, const Lexicon& lexicon,
                                        const DetectorConfig& config,
                                        const std::set<Pattern>& enabled) {
  std::vector<AssistantStep> steps = project_assistant_steps(session);

  std::vector<PatternInstance> all;
  auto append = [&](std::vector<PatternInstance>&& found) {
    for (auto& inst : found) {
      inst.session_id = session.session_id;
      all.push_back(std::move(inst));
    }
  };
  if (enabled.count(Pattern::P1)) append(detect_p1(steps, lexicon, config));
  if (enabled.count(Pattern::P2)) append(detect_p2(steps, lexicon, config));
  if (enabled.count(Pattern::P3)) append(detect_p3(steps, lexicon, config));
  if (enabled.count(Pattern::P4)) append(detect_p4(steps, lexicon, config));

  std::sort(all.begin(), all.end(), [](const PatternInstance& a, const PatternInstance& b) {
    if (a.anchor_step != b.anchor_step) return a.anchor_step < b.anchor_step;
    return a.pattern < b.pattern;
  });

  std::set<std::pair<Pattern, int>> seen;
  for (const auto& inst : all) {
    inst.validate(config);
    if (!seen.insert({inst.pattern, inst.anchor_step}).second)
      throw InvariantViolation("duplicate " + std::string(pattern_name(inst.pattern)) +
                               " instance at anchor " + std::to_string(inst.anchor_step));
  }
  return all;
}

nlohmann::json instance_to_json(const PatternInstance& inst) {
  nlohmann::json j;
  j["pattern"] = std::string(pattern_name(inst.pattern));
  j["session_id"] = inst.session_id;
  j["anchor_step"] = inst.anchor_step;
  j["start_step"] = inst.start_step;
  j["end_step"] = inst.end_step;
  nlohmann::json d;
  switch (inst.pattern) {
    case Pattern::P1: {
      const auto& p = std::get<P1Details>(inst.details);
      d["prune_step"] = p.prune_step;
      d["span_after_prune"] = p.span_after_prune;
      d["evidence_multi"] = p.evidence_multi;
      d["evidence_prune"] = p.evidence_prune;
      break;
    }
    case Pattern::P2: {
      const auto& p = std::get<P2Details>(inst.details);
      d["cont_count"] = p.cont_count;
      d["alt_count"] = p.alt_count;
      d["contrad_count"] = p.contrad_count;
      d["span"] = p.span;
      break;
    }
    case Pattern::P3: {
      const auto& p = std::get<P3Details>(inst.details);
      d["deferred_step"] = p.deferred_step;
      if (p.mat_step)
        d["mat_step"] = *p.mat_step;
      else
        d["mat_step"] = nullptr;
      d["bt_step"] = p.bt_step;
      d["span"] = p.span;
      d["new_evidence"] = p.new_evidence;
      d["impasse"] = p.impasse;
      break;
    }
    case Pattern::P4: {
      const auto& p = std::get<P4Details>(inst.details);
      d["feature_count"] = p.feature_count;
      d["justif_snippet"] = p.justif_snippet;
      d["keywords"] = nlohmann::json::array();
      for (const auto& e : p.keywords.entities) d["keywords"].push_back(e);
      break;
    }
  }
  j["details"] = std::move(d);
  return j;
}

PatternInstance instance_from_json(const nlohmann::json& j) {
  PatternInstance inst;
  auto pattern = pattern_from_name(j.at("pattern").get<std::string>());
  if (!pattern) throw Error("unknown pattern in instance: " + j.at("pattern").dump());
  inst.pattern = *pattern;
  inst.session_id = j.at("session_id").get<std::string>();
  inst.anchor_step = j.at("anchor_step").get<int>();
  inst.start_step = j.at("start_step").get<int>();
  inst.end_step = j.at("end_step").get<int>();
  const auto& d = j.at("details");
  switch (inst.pattern) {
    case Pattern::P1:
      inst.details = P1Details{d.at("prune_step").get<int>(), d.at("span_after_prune").get<int>(),
                               d.at("evidence_multi").get<std::string>(),
                               d.at("evidence_prune").get<std::string>()};
      break;
    case Pattern::P2:
      inst.details = P2Details{d.at("cont_count").get<int>(), d.at("alt_count").get<int>(),
                               d.at("contrad_count").get<int>(), d.at("span").get<int>()};
      break;
    case Pattern::P3: {
      P3Details p;
      p.deferred_step = d.at("deferred_step").get<int>();
      if (!d.at("mat_step").is_null()) p.mat_step = d.at("mat_step").get<int>();
      p.bt_step = d.at("bt_step").get<int>();
      p.span = d.at("span").get<int>();
      p.new_evidence = d.value("new_evidence", false);
      p.impasse = d.value("impasse", false);
      inst.details = std::move(p);
      break;
    }
    case Pattern::P4: {
      P4Details p;
      p.feature_count = d.at("feature_count").get<int>();
      p.justif_snippet = d.at("justif_snippet").get<std::string>();
      for (const auto& e : d.at("keywords")) p.keywords.entities.insert(e.get<std::string>());
      inst.details = std::move(p);
      break;
    }
  }
  return inst;
}

}  // namespace tracemine
