"""Smoke tests for the python bindings."""

import json

import pytest

import tracemine as tm

SESSION_TEXT = "\n".join(
    [
        json.dumps(
            {
                "role": "context_reset",
                "content": "Current file being analyzed is: demo.bin. Proceed.",
            }
        ),
        json.dumps(
            {
                "role": "assistant",
                "thought": "The doSystemCmd is a dangerous sink (command injection). "
                "I should identify taint sources that could reach it.",
                "action": "r2",
                "command": "pdf @sym.doSystemCmd",
                "status": "continue",
            }
        ),
        json.dumps(
            {
                "role": "tool",
                "type": "tool_result",
                "tool": "r2",
                "command": "pdf @sym.doSystemCmd",
                "result": "ok",
            }
        ),
    ]
)


def test_parse_and_project():
    session = tm.parse_session(SESSION_TEXT, "demo")
    assert session.session_id == "demo"
    assert session.binary_id == "demo.bin"
    assert session.num_records == 3
    assert session.assistant_indices == [1]

    steps = tm.project_assistant_steps(session)
    assert len(steps) == 1
    assert steps[0].command == "pdf @sym.doSystemCmd"

    rebuilt = tm.parse_session(tm.serialize_session(session), "demo")
    assert rebuilt.assistant_indices == session.assistant_indices


def test_detect_and_metrics():
    session = tm.parse_session(SESSION_TEXT, "demo")
    instances = tm.detect_all(session)
    assert len(instances) == 1
    inst = instances[0]
    assert inst.pattern == tm.Pattern.P4
    assert inst.anchor_step == 0
    details = inst.to_dict()["details"]
    assert details["feature_count"] == 2

    steps = tm.project_assistant_steps(session)
    metrics = tm.compute_metrics(steps, tm.Pattern.P4)
    assert metrics.path_length == 1
    assert metrics.forward_ratio == 1.0


def test_lexicon_and_entities():
    lex = tm.Lexicon.builtin()
    assert lex.version == "builtin-1"
    assert tm.match_signal("prune", "it is safe to skip this branch", lex)
    assert not tm.match_signal("prune", "", lex)
    with pytest.raises(ValueError):
        tm.match_signal("nonsense_kind", "text", lex)

    entities = tm.extract_semantic_entities("calls doSystemCmd at 0xDF54")
    assert "dosystemcmd" in entities
    assert "0xdf54" in entities


def test_topology():
    assert tm.base_command("pd 20 @ 0xdf54") == "pd"
    session = tm.parse_session(SESSION_TEXT, "demo")
    steps = tm.project_assistant_steps(session)
    graph = tm.build_graph(steps)
    assert graph.sequence_length == 1
    metrics = tm.topology_metrics(graph, steps)
    assert metrics.diversity == 1
    assert not metrics.has_cycle


def test_synth_and_analyze(tmp_path):
    corpus = tmp_path / "corpus"
    result = tm.generate_corpus(corpus, sessions=4, steps=70, p1=1, p2=1, p3=1, p4=3, seed=13)
    assert result["sessions"] == 4
    assert (corpus / "ground_truth.ndjson").exists()

    manifest = tm.load_manifest(result["manifest_path"])
    assert len(manifest) == result["expected_instances"]

    report = tm.analyze_corpus(corpus, jobs=2)
    assert report["run_metadata"]["session_count"] == 4
    totals = {row["pattern"]: row["total"] for row in report["prevalence_density"]}
    assert sum(totals.values()) == result["expected_instances"]


def test_select_representative():
    def session_of(n, sid):
        lines = "\n".join(
            json.dumps({"role": "assistant", "thought": "t", "status": "continue"})
            for _ in range(n)
        )
        return tm.parse_session(lines, sid)

    sessions = [session_of(140, "a"), session_of(200, "b"), session_of(160, "c")]
    pick = tm.select_representative_session(sessions, [True, True, True])
    assert pick.session_id == "b"

    short = [session_of(50, "a"), session_of(90, "b"), session_of(120, "c")]
    pick = tm.select_representative_session(short, [False, False, False])
    assert pick.session_id == "b"  # lower-median fallback


def test_parse_errors():
    with pytest.raises(tm.TraceMineError):
        tm.parse_session("not a record", "bad")
    with pytest.raises(tm.TraceMineError):
        tm.parse_session("", "empty")
