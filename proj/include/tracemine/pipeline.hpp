#pragma once

#include <filesystem>
#include <optional>
#include <set>

#include "tracemine/detectors.hpp"
#include "tracemine/report.hpp"

namespace tracemine {

struct AnalyzeOptions {
  std::optional<std::filesystem::path> lexicon_path;
  std::optional<std::filesystem::path> thresholds_path;
  std::set<Pattern> patterns = {Pattern::P1, Pattern::P2, Pattern::P3, Pattern::P4};
  int jobs = 1;
  bool skip_bad = false;
  std::uint64_t seed = 0;
  int top_k = 10;
};

/// Thresholds file: a JSON object; unknown keys are rejected, missing keys
/// keep their defaults.
DetectorConfig load_thresholds(const std::filesystem::path& path);

/// Full pipeline over every *.jsonl in corpus_dir: parse, detect, measure,
/// aggregate. Deterministic for fixed inputs and options, independent of
/// `jobs`. Parse failures abort unless skip_bad downgrades them to warnings
/// written to stderr.
CorpusReport analyze_corpus(const std::filesystem::path& corpus_dir,
                            const AnalyzeOptions& options = {});

}  // namespace tracemine
