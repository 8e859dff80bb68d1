#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "tracemine/detectors.hpp"
#include "tracemine/lexicon.hpp"
#include "tracemine/trace_model.hpp"

namespace tracemine::synth {

struct P1Plant {
  int start = 0;  // multi-path mention
  int prune = 0;  // pruning decision; strictly after start
};

struct P2Plant {
  int start = 0;                   // path-selection step
  std::vector<int> cont_positions; // strictly increasing, all after start
};

struct P3Plant {
  int deferred = 0;
  int mat = 0;
  int bt = 0;
};

enum class P4Feature { Analogy, Priority, SignalScore, PartialEvidence, Justification, Select };

struct P4Plant {
  int step = 0;
  std::vector<P4Feature> features;
};

/// One planted pattern occurrence. entity_tag is unique per plant so planted
/// instances cannot interact through entity overlap.
struct PlantSpec {
  Pattern pattern = Pattern::P1;
  std::variant<P1Plant, P2Plant, P3Plant, P4Plant> params;
  std::string entity_tag;

  int anchor() const;
  std::vector<int> trigger_steps() const;
};

struct GroundTruth {
  std::string session_id;
  std::vector<PlantSpec> plants;
  std::vector<PatternInstance> expected;
};

struct SynthResult {
  Session session;
  GroundTruth truth;
};

/// Builds a session of `length` assistant steps (interleaved with tool
/// records and led by a context reset) with the given plants spliced in.
/// Filler thoughts are screened against the lexicon so they trigger nothing.
/// Deterministic for a fixed seed. Throws InfeasiblePlant when the plants do
/// not fit the session or would not produce their instances.
SynthResult generate_session(int length, std::vector<PlantSpec> plants, std::uint64_t seed,
                             const Lexicon& lexicon = Lexicon::builtin(),
                             std::string_view session_id = "synth-0000");

/// Randomly places `counts` plants of each pattern into a session of the
/// given length, honoring every placement constraint the detectors imply.
std::vector<PlantSpec> plan_plants(int length, const std::array<int, 4>& counts,
                                   std::uint64_t seed);

/// Independent derivation of what the detection procedure must emit for
/// these plants; shares no code with the production detectors.
std::vector<PatternInstance> expected_instances(const std::vector<PlantSpec>& plants,
                                                int n_assistant, std::string_view session_id);

struct PlantMeans {
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double p4 = 0.0;
};

inline constexpr const char* kManifestFileName = "ground_truth.ndjson";

struct CorpusResult {
  std::vector<GroundTruth> sessions;
  std::filesystem::path manifest_path;
};

/// Writes n_sessions session files plus the ground-truth manifest (one
/// expected instance per line). Per-session plant counts follow the means via
/// largest-remainder allocation, shuffled by seed.
CorpusResult generate_corpus(const std::filesystem::path& out_dir, int n_sessions, int steps,
                             const PlantMeans& means, std::uint64_t seed,
                             const Lexicon& lexicon = Lexicon::builtin());

/// Corpus with complementary P2/P4 plant intensities per session (P2 + P4 =
/// pair_total), for correlation studies.
CorpusResult generate_complementary_corpus(const std::filesystem::path& out_dir, int n_sessions,
                                           int steps, int pair_total, std::uint64_t seed,
                                           const Lexicon& lexicon = Lexicon::builtin());

std::vector<PatternInstance> load_manifest(const std::filesystem::path& path);

}  // namespace tracemine::synth
