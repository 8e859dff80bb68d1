#include <doctest.h>

#include <map>
#include <random>

#include "tracemine/detectors.hpp"
#include "tracemine/errors.hpp"
#include "tracemine/trace_model.hpp"

using namespace tracemine;

namespace {

const char* kNeutral = "The register usage in this routine is ordinary.";

std::vector<AssistantStep> steps_with(int n, const std::map<int, std::string>& thoughts) {
  std::vector<AssistantStep> steps;
  for (int i = 0; i < n; ++i) {
    AssistantStep step;
    step.step_pos = i;
    auto it = thoughts.find(i);
    step.thought = it != thoughts.end() ? it->second : kNeutral;
    step.action = "r2";
    step.command = "i";
    step.status = "continue";
    steps.push_back(std::move(step));
  }
  return steps;
}

const Lexicon& lex() { return Lexicon::builtin(); }

}  // namespace

TEST_CASE("detect_p1: multi-path then prune emits once the trailing span is long enough") {
  auto steps = steps_with(40, {
      {3, "There are multiple locations around sym.alpha that deserve a look."},
      {8, "It is safe to skip the remaining branches; sym.alpha stays in scope."},
  });
  auto found = detect_p1(steps, lex());
  REQUIRE(found.size() == 1);
  const auto& inst = found[0];
  CHECK(inst.start_step == 3);
  CHECK(inst.anchor_step == 8);
  CHECK(inst.end_step == 8);
  const auto& d = std::get<P1Details>(inst.details);
  CHECK(d.prune_step == 8);
  CHECK(d.span_after_prune == 32);
  CHECK(d.evidence_multi == "There are multiple locations around sym.alpha that deserve a look.");
  CHECK(d.evidence_prune ==
        "It is safe to skip the remaining branches; sym.alpha stays in scope.");
}

TEST_CASE("detect_p1: a revisit sharing an entity cancels the candidate") {
  auto steps = steps_with(40, {
      {3, "There are multiple locations around sym.alpha that deserve a look."},
      {8, "It is safe to skip the remaining branches; sym.alpha stays in scope."},
      {15, "Let me revisit sym.alpha once more."},
  });
  CHECK(detect_p1(steps, lex()).empty());
}

TEST_CASE("detect_p1: a revisit with disjoint entities leaves the candidate alone") {
  auto steps = steps_with(40, {
      {3, "There are multiple locations around sym.alpha that deserve a look."},
      {8, "It is safe to skip the remaining branches; sym.alpha stays in scope."},
      {15, "Let me revisit sym.unrelated once more."},
  });
  CHECK(detect_p1(steps, lex()).size() == 1);
}

TEST_CASE("detect_p1: empty thoughts detect nothing") {
  std::map<int, std::string> blank;
  for (int i = 0; i < 40; ++i) blank[i] = "";
  CHECK(detect_p1(steps_with(40, blank), lex()).empty());
}

TEST_CASE("detect_p1: prune attaches to the most recent unpruned candidate") {
  auto steps = steps_with(40, {
      {3, "There are multiple locations around sym.alpha that deserve a look."},
      {5, "There are multiple locations around sym.beta that deserve a look."},
      {8, "It is safe to skip the remaining branches; sym.beta stays in scope."},
      {10, "The rest is irrelevant here; only sym.alpha matters."},
  });
  auto found = detect_p1(steps, lex());
  REQUIRE(found.size() == 2);
  // sorted by start_step
  CHECK(found[0].start_step == 3);
  CHECK(std::get<P1Details>(found[0].details).prune_step == 10);
  CHECK(found[1].start_step == 5);
  CHECK(std::get<P1Details>(found[1].details).prune_step == 8);
}

TEST_CASE("detect_p1: evidence snippets truncate at 500 characters") {
  std::string long_multi = "There are multiple locations around sym.alpha that deserve a look. ";
  while (long_multi.size() < 700) long_multi += "The listing continues with more of the same. ";
  auto steps = steps_with(40, {
      {3, long_multi},
      {8, "It is safe to skip the remaining branches; sym.alpha stays in scope."},
  });
  auto found = detect_p1(steps, lex());
  REQUIRE(found.size() == 1);
  const auto& d = std::get<P1Details>(found[0].details);
  CHECK(d.evidence_multi.size() == 500);
  CHECK(d.evidence_multi == long_multi.substr(0, 500));
}

TEST_CASE("detect_p1: the 20-step trailing span is a hard threshold") {
  std::map<int, std::string> thoughts = {
      {1, "There are multiple locations around sym.alpha that deserve a look."}};
  SUBCASE("span exactly 20 emits") {
    thoughts[20] = "It is safe to skip the remaining branches; sym.alpha stays in scope.";
    auto found = detect_p1(steps_with(40, thoughts), lex());
    REQUIRE(found.size() == 1);
    CHECK(std::get<P1Details>(found[0].details).span_after_prune == 20);
  }
  SUBCASE("span 19 does not") {
    thoughts[21] = "It is safe to skip the remaining branches; sym.alpha stays in scope.";
    CHECK(detect_p1(steps_with(40, thoughts), lex()).empty());
  }
}

TEST_CASE("detect_p2: selection plus five continuations over a 10-step span") {
  std::map<int, std::string> thoughts = {
      {2, "I will analyze doSystemCmd closely from here."}};
  for (int pos : {3, 5, 7, 9, 12}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  auto found = detect_p2(steps_with(20, thoughts), lex());
  REQUIRE(found.size() == 1);
  const auto& inst = found[0];
  CHECK(inst.start_step == 2);
  CHECK(inst.anchor_step == 2);
  CHECK(inst.end_step == 12);
  const auto& d = std::get<P2Details>(inst.details);
  CHECK(d.cont_count == 5);
  CHECK(d.alt_count == 0);
  CHECK(d.contrad_count == 0);
  CHECK(d.span == 10);
}

TEST_CASE("detect_p2: global re-evaluation naming the entity drops the path") {
  std::map<int, std::string> thoughts = {
      {2, "I will analyze doSystemCmd closely from here."},
      {6, "Time to step back and rethink the doSystemCmd route."}};
  for (int pos : {3, 5, 7, 9, 12}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  CHECK(detect_p2(steps_with(20, thoughts), lex()).empty());
}

TEST_CASE("detect_p2: no path selection anywhere means no instances") {
  std::map<int, std::string> thoughts;
  for (int pos : {3, 5, 7, 9, 12}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  CHECK(detect_p2(steps_with(20, thoughts), lex()).empty());
}

TEST_CASE("detect_p2: absorbed contradictions count and extend the segment") {
  std::map<int, std::string> thoughts = {
      {2, "I will analyze doSystemCmd closely from here."},
      {11, "However this check contradicts the doSystemCmd assumption."}};
  for (int pos : {3, 5, 7, 9, 13}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  auto found = detect_p2(steps_with(20, thoughts), lex());
  REQUIRE(found.size() == 1);
  const auto& d = std::get<P2Details>(found[0].details);
  CHECK(d.cont_count == 6);  // the contradiction step also continues the path
  CHECK(d.contrad_count == 1);
  CHECK(d.span == 11);
  CHECK(found[0].end_step == 13);
}

TEST_CASE("detect_p2: a fresh selection after emission can re-detect the same entity") {
  std::map<int, std::string> thoughts = {
      {0, "I will analyze doSystemCmd closely from here."},
      {20, "I will analyze doSystemCmd closely from here."}};
  for (int pos : {2, 4, 6, 8, 10}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  for (int pos : {22, 24, 26, 28, 30}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  auto found = detect_p2(steps_with(35, thoughts), lex());
  REQUIRE(found.size() == 2);
  CHECK(found[0].start_step == 0);
  CHECK(found[1].start_step == 20);
}

TEST_CASE("detect_p3: deferred, developed, then backtracked") {
  auto steps = steps_with(30, {
      {4, "I note a few leads worth considering later, including doSystemCmd."},
      {6, "Time to dig into doSystemCmd in earnest."},
      {20, "Let me go back to doSystemCmd now."},
  });
  auto found = detect_p3(steps, lex());
  REQUIRE(found.size() == 1);
  const auto& inst = found[0];
  CHECK(inst.start_step == 4);
  CHECK(inst.anchor_step == 20);
  CHECK(inst.end_step == 20);
  const auto& d = std::get<P3Details>(inst.details);
  CHECK(d.deferred_step == 4);
  REQUIRE(d.mat_step.has_value());
  CHECK(*d.mat_step == 6);
  CHECK(d.bt_step == 20);
  CHECK(d.span == 16);
  CHECK_FALSE(d.new_evidence);
  CHECK_FALSE(d.impasse);
}

TEST_CASE("detect_p3: backtracking with disjoint entities never matches") {
  auto steps = steps_with(30, {
      {4, "I note a few leads worth considering later, including doSystemCmd."},
      {20, "Let me go back to sym.other now."},
  });
  CHECK(detect_p3(steps, lex()).empty());
}

TEST_CASE("detect_p3: backtracking without any deferred path detects nothing") {
  auto steps = steps_with(30, {{20, "Let me go back to doSystemCmd now."}});
  CHECK(detect_p3(steps, lex()).empty());
}

TEST_CASE("detect_p3: a backtracked path is retired; fresh mentions restart the cycle") {
  auto steps = steps_with(30, {
      {4, "I note a few leads worth considering later, including doSystemCmd."},
      {6, "Time to dig into doSystemCmd in earnest."},
      {10, "Let me go back to doSystemCmd now."},
      {12, "Keeping doSystemCmd in the candidate pool for now."},
      {15, "I come back to doSystemCmd after the detour."},
  });
  auto found = detect_p3(steps, lex());
  REQUIRE(found.size() == 2);
  CHECK(std::get<P3Details>(found[0].details).bt_step == 10);
  CHECK(std::get<P3Details>(found[0].details).deferred_step == 4);
  CHECK(std::get<P3Details>(found[1].details).bt_step == 15);
  CHECK(std::get<P3Details>(found[1].details).deferred_step == 12);
}

TEST_CASE("detect_p3: impasse context is noted on the instance") {
  auto steps = steps_with(30, {
      {4, "I note a few leads worth considering later, including doSystemCmd."},
      {20, "I hit a wall here; let me go back to doSystemCmd now."},
  });
  auto found = detect_p3(steps, lex());
  REQUIRE(found.size() == 1);
  CHECK(std::get<P3Details>(found[0].details).impasse);
  REQUIRE_FALSE(std::get<P3Details>(found[0].details).mat_step.has_value());
}

TEST_CASE("detect_p4: dangerous-sink scoring plus a selection fires") {
  auto steps = steps_with(12, {
      {2, "The doSystemCmd is a dangerous sink (command injection). I should identify "
          "taint sources that could reach it."},
  });
  auto found = detect_p4(steps, lex());
  REQUIRE(found.size() == 1);
  const auto& inst = found[0];
  CHECK(inst.anchor_step == 2);
  CHECK(inst.start_step == 2);
  CHECK(inst.end_step == 7);  // fixed six-step window
  const auto& d = std::get<P4Details>(inst.details);
  CHECK(d.feature_count == 2);
  CHECK(d.keywords.contains("dosystemcmd"));
}

TEST_CASE("detect_p4: the six-step window clips at the trace end") {
  auto steps = steps_with(4, {
      {2, "The doSystemCmd is a dangerous sink. I should identify taint sources."},
  });
  auto found = detect_p4(steps, lex());
  REQUIRE(found.size() == 1);
  CHECK(found[0].end_step == 3);
}

TEST_CASE("detect_p4: two-tier criterion truth table") {
  SUBCASE("selection without a core feature does not fire") {
    auto steps = steps_with(12, {{2, "I should examine the parser here."}});
    CHECK(detect_p4(steps, lex()).empty());
  }
  SUBCASE("empty thought does not fire") {
    auto steps = steps_with(12, {{2, ""}});
    CHECK(detect_p4(steps, lex()).empty());
  }
  SUBCASE("core with three features but no decision fires") {
    auto steps = steps_with(12, {
        {3, "This resembles a known pattern around sym.q. So far the evidence around sym.q "
            "is partial. Because sym.q handles raw input directly."},
    });
    auto found = detect_p4(steps, lex());
    REQUIRE(found.size() == 1);
    const auto& d = std::get<P4Details>(found[0].details);
    CHECK(d.feature_count == 3);
    CHECK(d.justif_snippet.substr(0, 7) == "Because");  // verbatim from the thought
  }
  SUBCASE("several features without a core feature do not fire") {
    auto steps = steps_with(12, {
        {3, "The highest priority target is sym.r. So far the evidence around sym.r is "
            "partial. I should examine sym.r soon."},
    });
    CHECK(detect_p4(steps, lex()).empty());
  }
}

TEST_CASE("detect_p4: justification snippet starts at the justification match") {
  auto steps = steps_with(12, {
      {1, "The doSystemCmd is a dangerous sink. I should trace it because the arguments "
          "come from the network."},
  });
  auto found = detect_p4(steps, lex());
  REQUIRE(found.size() == 1);
  const auto& d = std::get<P4Details>(found[0].details);
  CHECK(d.justif_snippet.substr(0, 7) == "because");
}

TEST_CASE("detect_all: composition, ordering, session ids") {
  std::string text;
  auto add_step = [&](const std::string& thought) {
    nlohmann::json obj{{"role", "assistant"},
                       {"thought", thought},
                       {"action", "r2"},
                       {"command", "i"},
                       {"status", "continue"}};
    text += obj.dump();
    text += '\n';
  };
  for (int i = 0; i < 40; ++i) {
    if (i == 3)
      add_step("There are multiple locations around sym.alpha that deserve a look.");
    else if (i == 8)
      add_step("It is safe to skip the remaining branches; sym.alpha stays in scope.");
    else if (i == 5 || i == 30)
      add_step("The doSystemCmd is a dangerous sink. I should identify taint sources.");
    else
      add_step(kNeutral);
  }
  Session session = parse_session(text, "combo");
  auto found = detect_all(session, lex());
  REQUIRE(found.size() == 3);
  CHECK(found[0].pattern == Pattern::P4);
  CHECK(found[0].anchor_step == 5);
  CHECK(found[1].pattern == Pattern::P1);
  CHECK(found[1].anchor_step == 8);
  CHECK(found[2].pattern == Pattern::P4);
  CHECK(found[2].anchor_step == 30);
  for (const auto& inst : found) CHECK(inst.session_id == "combo");

  SUBCASE("pattern filter restricts the output") {
    auto only_p4 = detect_all(session, lex(), {}, {Pattern::P4});
    CHECK(only_p4.size() == 2);
  }
  SUBCASE("determinism") { CHECK(detect_all(session, lex()) == found); }
}

TEST_CASE("detect_all: session without assistant records detects nothing") {
  Session session =
      parse_session(R"({"role": "tool", "tool": "r2", "result": "ok"})" "\n", "toolonly");
  CHECK(detect_all(session, lex()).empty());
}

TEST_CASE("locality: appending steps never rewrites finalized instances") {
  std::map<int, std::string> thoughts = {
      {2, "I will analyze doSystemCmd closely from here."}};
  for (int pos : {3, 5, 7, 9, 12}) thoughts[pos] = "Continuing with doSystemCmd as planned.";
  thoughts[1] = "There are multiple locations around sym.alpha that deserve a look.";
  thoughts[4] = "It is safe to skip the remaining branches; sym.alpha stays in scope.";

  auto before = steps_with(30, thoughts);
  auto after = steps_with(42, thoughts);

  auto p2_before = detect_p2(before, lex());
  auto p2_after = detect_p2(after, lex());
  CHECK(p2_before == p2_after);

  auto p1_before = detect_p1(before, lex());
  auto p1_after = detect_p1(after, lex());
  REQUIRE(p1_before.size() == 1);
  REQUIRE(p1_after.size() == 1);
  CHECK(std::get<P1Details>(p1_after[0].details).span_after_prune ==
        std::get<P1Details>(p1_before[0].details).span_after_prune + 12);
}

TEST_CASE("detectors hold their invariants on adversarial phrase soup") {
  // Random mixes of live signal phrases and entities stress the candidate
  // lifecycles; detect_all validates every emitted instance internally.
  const char* phrases[] = {
      "There are multiple locations around {} that deserve a look.",
      "It is safe to skip the remaining branches; {} stays in scope.",
      "I will analyze {} closely from here.",
      "Continuing with {} as planned.",
      "Let me revisit {} once more.",
      "Time to step back and rethink the {} route.",
      "I note a few leads worth considering later, including {}.",
      "Time to dig into {} in earnest.",
      "Let me go back to {} now.",
      "The {} function is a dangerous sink. I should identify taint sources.",
      "However this contradicts the {} assumption.",
      "There is another option near {} too.",
      "The register usage in this routine is ordinary.",
  };
  const char* entities[] = {"sym.alpha", "sym.beta", "0xdf54", "doSystemCmd"};
  std::mt19937 rng(1337);
  for (int trial = 0; trial < 60; ++trial) {
    std::string text;
    int n = 20 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      std::string phrase = phrases[rng() % std::size(phrases)];
      if (auto pos = phrase.find("{}"); pos != std::string::npos)
        phrase = phrase.substr(0, pos) + entities[rng() % std::size(entities)] +
                 phrase.substr(pos + 2);
      nlohmann::json obj{{"role", "assistant"},
                         {"thought", phrase},
                         {"action", "r2"},
                         {"command", "i"},
                         {"status", "continue"}};
      text += obj.dump();
      text += '\n';
    }
    Session session = parse_session(text, "soup");
    CAPTURE(trial);
    CHECK_NOTHROW((void)detect_all(session, lex()));  // validates every instance
    CHECK(detect_all(session, lex()) == detect_all(session, lex()));
  }
}

TEST_CASE("thresholds are configuration, not constants") {
  DetectorConfig config;
  config.p1_min_span_after_prune = 5;
  auto steps = steps_with(16, {
      {1, "There are multiple locations around sym.alpha that deserve a look."},
      {9, "It is safe to skip the remaining branches; sym.alpha stays in scope."},
  });
  CHECK(detect_p1(steps, lex()).empty());              // default 20 blocks it
  CHECK(detect_p1(steps, lex(), config).size() == 1);  // lowered threshold lets it through
}
