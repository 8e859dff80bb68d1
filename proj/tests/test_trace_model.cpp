#include <doctest.h>

#include <algorithm>
#include <random>

#include "tracemine/errors.hpp"
#include "tracemine/trace_model.hpp"

using namespace tracemine;

namespace {

const char* kTwoLineSession =
    R"({"role": "assistant", "thought": "I've seen the main function. There are functions sym.SetAcEntry and sym.GetAcEntry that likely perform ioctl calls.", "action": "r2", "command": "pdf @sym.SetAcEntry", "status": "continue"}
{"role": "tool", "type": "tool_result", "tool": "r2", "command": "pdf @sym.SetAcEntry", "result": "| 0x00401540      d8ffbd27       addiu sp, sp, -0x28"}
)";

Session make_session(const std::string& id, int records) {
  std::string text;
  for (int i = 0; i < records; ++i)
    text += R"({"role": "assistant", "thought": "t", "status": "continue"})" "\n";
  return parse_session(text, id);
}

}  // namespace

TEST_CASE("parse_session: assistant + tool record pair") {
  Session s = parse_session(kTwoLineSession, "ac6");
  CHECK(s.steps.size() == 2);
  CHECK(s.assistant_indices == std::vector<int>{0});
  CHECK(s.steps[0].role == Role::Assistant);
  CHECK(s.steps[0].command == "pdf @sym.SetAcEntry");
  CHECK(s.steps[0].status == "continue");
  CHECK(s.steps[1].role == Role::Tool);
  CHECK(s.steps[1].result.has_value());
  // extra fields (here: "type") ride along untouched
  CHECK(s.steps[1].extra.at("type") == "tool_result");
}

TEST_CASE("parse_session: empty input is EmptySession, not MalformedRecord") {
  CHECK_THROWS_AS(parse_session("", "x"), EmptySession);
  CHECK_THROWS_AS(parse_session("\n  \n\t\n", "x"), EmptySession);
}

TEST_CASE("parse_session: interleaving fixes assistant indices") {
  std::string text;
  for (int i = 0; i < 3; ++i) {
    text += R"({"role": "assistant", "thought": "a", "status": "continue"})" "\n";
    text += R"({"role": "tool", "tool": "r2", "result": "ok"})" "\n";
  }
  Session s = parse_session(text, "x");
  CHECK(s.steps.size() == 6);
  CHECK(s.assistant_indices == std::vector<int>{0, 2, 4});
  // raw indices strictly increase
  CHECK(std::is_sorted(s.assistant_indices.begin(), s.assistant_indices.end()));
}

TEST_CASE("parse_session: malformed lines abort with the line number") {
  SUBCASE("not json") {
    try {
      parse_session("{\"role\": \"assistant\", \"thought\": \"t\", \"status\": \"s\"}\nnot json\n", "x");
      FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
      CHECK(e.line_no() == 2);
    }
  }
  SUBCASE("missing role") { CHECK_THROWS_AS(parse_session("{\"thought\": \"t\"}\n", "x"), MalformedRecord); }
  SUBCASE("unknown role") {
    CHECK_THROWS_AS(parse_session("{\"role\": \"oracle\"}\n", "x"), MalformedRecord);
  }
  SUBCASE("assistant without status") {
    CHECK_THROWS_AS(parse_session("{\"role\": \"assistant\", \"thought\": \"t\"}\n", "x"),
                    MalformedRecord);
  }
  SUBCASE("assistant without thought") {
    CHECK_THROWS_AS(parse_session("{\"role\": \"assistant\", \"status\": \"continue\"}\n", "x"),
                    MalformedRecord);
  }
  SUBCASE("tool without result") {
    CHECK_THROWS_AS(parse_session("{\"role\": \"tool\", \"command\": \"i\"}\n", "x"),
                    MalformedRecord);
  }
  SUBCASE("non-object line") {
    CHECK_THROWS_AS(parse_session("[1,2,3]\n", "x"), MalformedRecord);
  }
}

TEST_CASE("parse_session: empty thought is allowed on assistant records") {
  Session s = parse_session(R"({"role": "assistant", "thought": "", "status": "continue"})" "\n", "x");
  CHECK(s.steps[0].thought == "");
}

TEST_CASE("parse_session: binary id comes from the first context reset") {
  std::string text =
      R"({"role": "context_reset", "content": "New context. Current file being analyzed is: pptp-ondemand.bin. Continue."})"
      "\n"
      R"({"role": "assistant", "thought": "t", "status": "continue"})"
      "\n";
  Session s = parse_session(text, "session-7");
  CHECK(s.binary_id == "pptp-ondemand.bin");

  Session no_reset = parse_session(R"({"role": "assistant", "thought": "t", "status": "continue"})" "\n",
                                   "session-7");
  CHECK(no_reset.binary_id == "session-7");
}

TEST_CASE("round-trip: serialize then reparse is field-for-field identical") {
  std::string text =
      R"({"role": "context_reset", "content": "Current file being analyzed is: z.bin"})"
      "\n"
      R"({"role": "assistant", "thought": "look at sym.a", "action": "r2", "command": "pdf @sym.a", "status": "continue", "aux": {"k": 1}})"
      "\n"
      R"({"role": "tool", "type": "tool_result", "tool": "r2", "command": "pdf @sym.a", "result": "ok"})"
      "\n";
  Session first = parse_session(text, "rt");
  Session second = parse_session(serialize_session(first), "rt");
  CHECK(first == second);
}

TEST_CASE("project_assistant_steps") {
  SUBCASE("three interleaved assistant records project to positions 0,1,2") {
    std::string text;
    for (int i = 0; i < 3; ++i) {
      text += R"({"role": "assistant", "thought": "a", "status": "continue"})" "\n";
      text += R"({"role": "tool", "tool": "r2", "result": "ok"})" "\n";
    }
    auto steps = project_assistant_steps(parse_session(text, "x"));
    REQUIRE(steps.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(steps[static_cast<std::size_t>(i)].step_pos == i);
  }
  SUBCASE("no assistant records gives an empty projection") {
    auto steps = project_assistant_steps(
        parse_session(R"({"role": "tool", "tool": "r2", "result": "ok"})" "\n", "x"));
    CHECK(steps.empty());
  }
  SUBCASE("sample session projects the command verbatim") {
    auto steps = project_assistant_steps(parse_session(kTwoLineSession, "x"));
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].command == "pdf @sym.SetAcEntry");
  }
}

TEST_CASE("select_representative_session") {
  SUBCASE("complete sessions pick the longest") {
    Session a = make_session("a", 140), b = make_session("b", 200), c = make_session("c", 160);
    auto& pick = select_representative_session({{&a, true}, {&b, true}, {&c, true}});
    CHECK(pick.session_id == "b");
  }
  SUBCASE("all incomplete falls back to the lower median") {
    Session a = make_session("a", 50), b = make_session("b", 90), c = make_session("c", 120);
    auto& pick = select_representative_session({{&a, false}, {&b, false}, {&c, false}});
    CHECK(pick.session_id == "b");
  }
  SUBCASE("even count uses the lower median") {
    Session a = make_session("a", 50), b = make_session("b", 90), c = make_session("c", 120),
            d = make_session("d", 129);
    auto& pick = select_representative_session({{&a, false}, {&b, false}, {&c, false}, {&d, false}});
    CHECK(pick.session_id == "b");
  }
  SUBCASE("single complete survivor wins over longer incomplete ones") {
    Session a = make_session("a", 131), b = make_session("b", 400), c = make_session("c", 500);
    auto& pick = select_representative_session({{&a, true}, {&b, false}, {&c, false}});
    CHECK(pick.session_id == "a");
  }
  SUBCASE("a complete session below 130 steps is discarded") {
    Session a = make_session("a", 129), b = make_session("b", 131);
    auto& pick = select_representative_session({{&a, true}, {&b, true}});
    CHECK(pick.session_id == "b");
  }
  SUBCASE("length ties resolve by session id") {
    Session a = make_session("zz", 150), b = make_session("aa", 150);
    auto& pick = select_representative_session({{&a, true}, {&b, true}});
    CHECK(pick.session_id == "aa");
  }
  SUBCASE("empty candidate list throws") {
    CHECK_THROWS_AS(select_representative_session({}), NoCandidates);
  }
  SUBCASE("permutation invariance") {
    Session a = make_session("a", 135), b = make_session("b", 170), c = make_session("c", 90),
            d = make_session("d", 170);
    std::vector<SessionCandidate> candidates{{&a, true}, {&b, true}, {&c, false}, {&d, true}};
    const std::string expected =
        select_representative_session(candidates).session_id;
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      std::shuffle(candidates.begin(), candidates.end(), rng);
      CHECK(select_representative_session(candidates).session_id == expected);
    }
  }
}
