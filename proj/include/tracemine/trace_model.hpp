#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tracemine {

enum class Role { Assistant, Tool, ContextReset };

std::string_view role_name(Role role);

/// One line of a session trace. Unrecognized fields are kept verbatim in
/// `extra` so corpora with auxiliary metadata round-trip unchanged.
struct StepRecord {
  Role role = Role::Assistant;
  std::optional<std::string> thought;
  std::optional<std::string> action;
  std::optional<std::string> command;
  std::optional<std::string> status;
  std::optional<std::string> tool;
  std::optional<std::string> result;
  int raw_index = 0;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const StepRecord&) const = default;
};

/// An ordered trace of one agent/binary interaction.
struct Session {
  std::string session_id;
  std::string binary_id;
  std::vector<StepRecord> steps;
  std::vector<int> assistant_indices;  // raw_index of each assistant record

  bool operator==(const Session&) const = default;
};

/// Projection of an assistant record used by the detectors. step_pos is the
/// position among assistant records, not the raw record index.
struct AssistantStep {
  int step_pos = 0;
  std::string thought;
  std::string action;
  std::string command;
  std::string status;
};

/// Parses line-delimited records. Blank lines are skipped; any other line
/// that is not a record object with a valid role aborts with MalformedRecord.
/// Throws EmptySession when no records remain.
Session parse_session(std::string_view text, std::string_view session_id = "session");

Session parse_session_file(const std::filesystem::path& path);

/// Inverse of parse_session: one record object per line.
std::string serialize_session(const Session& session);

std::vector<AssistantStep> project_assistant_steps(const Session& session);

/// Sessions shorter than this many records are treated as incomplete when
/// selecting a representative session per binary.
inline constexpr int kMinCompleteSteps = 130;

struct SessionCandidate {
  const Session* session = nullptr;
  bool complete = false;  // terminated normally, per the caller
};

/// Picks one session per binary: discard incomplete or short candidates,
/// keep the single survivor or the longest (ties resolve to the smallest
/// session_id); with no survivors fall back to the lower-median length.
const Session& select_representative_session(const std::vector<SessionCandidate>& candidates);

}  // namespace tracemine
