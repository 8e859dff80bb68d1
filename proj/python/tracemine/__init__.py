"""Pattern mining over agent reasoning traces.

Thin wrapper around the compiled _core module; see the project README for
the full CLI and file-format documentation.
"""

from tracemine._core import (
    AssistantStep,
    DetectorConfig,
    Lexicon,
    Pattern,
    PatternInstance,
    SegmentMetrics,
    Session,
    TopologyMetrics,
    TraceMineError,
    TransitionGraph,
    __version__,
    analyze_corpus,
    base_command,
    build_graph,
    compute_metrics,
    detect_all,
    extract_semantic_entities,
    generate_corpus,
    load_manifest,
    match_signal,
    parse_session,
    parse_session_file,
    select_representative_session,
    project_assistant_steps,
    serialize_session,
    topology_metrics,
)

__all__ = [
    "AssistantStep",
    "DetectorConfig",
    "Lexicon",
    "Pattern",
    "PatternInstance",
    "SegmentMetrics",
    "Session",
    "TopologyMetrics",
    "TraceMineError",
    "TransitionGraph",
    "__version__",
    "analyze_corpus",
    "base_command",
    "build_graph",
    "compute_metrics",
    "detect_all",
    "extract_semantic_entities",
    "generate_corpus",
    "load_manifest",
    "match_signal",
    "parse_session",
    "parse_session_file",
    "select_representative_session",
    "project_assistant_steps",
    "serialize_session",
    "topology_metrics",
]
