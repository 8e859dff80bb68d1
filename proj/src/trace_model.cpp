#include "tracemine/trace_model.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "tracemine/errors.hpp"

namespace tracemine {

namespace {

const char* const kTypedFields[] = {"role",   "thought", "action", "command",
                                    "status", "tool",    "result"};

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "assistant") return Role::Assistant;
  if (s == "tool") return Role::Tool;
  if (s == "context_reset") return Role::ContextReset;
  return std::nullopt;
}

std::optional<std::string> take_string_field(const nlohmann::json& obj, const char* key,
                                             int line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_string())
    throw MalformedRecord(line_no, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

// Recovers the target binary name from the first context-reset record.
std::string binary_id_from_reset(const StepRecord& reset) {
  static const std::regex kNameRe(R"(Current file being analyzed is:\s*([^\s\"]+))");
  std::vector<std::string> haystacks;
  if (reset.thought) haystacks.push_back(*reset.thought);
  if (reset.result) haystacks.push_back(*reset.result);
  for (auto& [key, value] : reset.extra.items()) {
    (void)key;
    if (value.is_string()) haystacks.push_back(value.get<std::string>());
  }
  for (const auto& text : haystacks) {
    std::smatch m;
    if (std::regex_search(text, m, kNameRe)) {
      std::string name = m[1].str();
      while (!name.empty() && (name.back() == '.' || name.back() == ','))
        name.pop_back();
      if (!name.empty()) return name;
    }
  }
  return {};
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
    case Role::ContextReset: return "context_reset";
  }
  return "unknown";
}

Session parse_session(std::string_view text, std::string_view session_id) {
  Session session;
  session.session_id = std::string(session_id);

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  int raw_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (!obj.is_object()) throw MalformedRecord(line_no, "record is not an object");
    auto role_it = obj.find("role");
    if (role_it == obj.end()) throw MalformedRecord(line_no, "record lacks a role field");
    if (!role_it->is_string()) throw MalformedRecord(line_no, "role is not a string");
    auto role = role_from_string(role_it->get<std::string>());
    if (!role)
      throw MalformedRecord(line_no, "unknown role: " + role_it->get<std::string>());

    StepRecord record;
    record.role = *role;
    record.raw_index = raw_index;
    record.thought = take_string_field(obj, "thought", line_no);
    record.action = take_string_field(obj, "action", line_no);
    record.command = take_string_field(obj, "command", line_no);
    record.status = take_string_field(obj, "status", line_no);
    record.tool = take_string_field(obj, "tool", line_no);
    record.result = take_string_field(obj, "result", line_no);
    for (auto& [key, value] : obj.items()) {
      if (std::find_if(std::begin(kTypedFields), std::end(kTypedFields),
                       [&](const char* f) { return key == f; }) == std::end(kTypedFields))
        record.extra[key] = value;
    }

    if (record.role == Role::Assistant) {
      if (!record.thought)
        throw MalformedRecord(line_no, "assistant record lacks a thought field");
      if (!record.status)
        throw MalformedRecord(line_no, "assistant record lacks a status field");
      session.assistant_indices.push_back(raw_index);
    } else if (record.role == Role::Tool) {
      if (!record.result) throw MalformedRecord(line_no, "tool record lacks a result field");
    }

    session.steps.push_back(std::move(record));
    ++raw_index;
  }

  if (session.steps.empty()) throw EmptySession();

  session.binary_id = session.session_id;
  for (const auto& step : session.steps) {
    if (step.role == Role::ContextReset) {
      if (auto name = binary_id_from_reset(step); !name.empty()) session.binary_id = name;
      break;
    }
  }
  return session;
}

Session parse_session_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_session(buf.str(), path.stem().string());
}

std::string serialize_session(const Session& session) {
  std::string out;
  for (const auto& step : session.steps) {
    nlohmann::json obj = step.extra;
    obj["role"] = std::string(role_name(step.role));
    if (step.thought) obj["thought"] = *step.thought;
    if (step.action) obj["action"] = *step.action;
    if (step.command) obj["command"] = *step.command;
    if (step.status) obj["status"] = *step.status;
    if (step.tool) obj["tool"] = *step.tool;
    if (step.result) obj["result"] = *step.result;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<AssistantStep> project_assistant_steps(const Session& session) {
  std::vector<AssistantStep> steps;
  steps.reserve(session.assistant_indices.size());
  for (int raw : session.assistant_indices) {
    const StepRecord& record = session.steps[static_cast<std::size_t>(raw)];
    AssistantStep step;
    step.step_pos = static_cast<int>(steps.size());
    step.thought = record.thought.value_or("");
    step.action = record.action.value_or("");
    step.command = record.command.value_or("");
    step.status = record.status.value_or("");
    steps.push_back(std::move(step));
  }
  return steps;
}

const Session& select_representative_session(const std::vector<SessionCandidate>& candidates) {
  if (candidates.empty()) throw NoCandidates();

  auto id_of = [](const SessionCandidate& c) -> const std::string& {
    return c.session->session_id;
  };
  auto len_of = [](const SessionCandidate& c) {
    return static_cast<long>(c.session->steps.size());
  };

  std::vector<const SessionCandidate*> eligible;
  for (const auto& c : candidates)
    if (c.complete && len_of(c) >= kMinCompleteSteps) eligible.push_back(&c);

  if (!eligible.empty()) {
    const SessionCandidate* best = eligible.front();
    for (const auto* c : eligible) {
      if (len_of(*c) > len_of(*best) ||
          (len_of(*c) == len_of(*best) && id_of(*c) < id_of(*best)))
        best = c;
    }
    return *best->session;
  }

  // Median fallback over all candidates; lower median for even counts.
  std::vector<long> lengths;
  lengths.reserve(candidates.size());
  for (const auto& c : candidates) lengths.push_back(len_of(c));
  std::sort(lengths.begin(), lengths.end());
  long median = lengths[(lengths.size() - 1) / 2];

  const SessionCandidate* pick = nullptr;
  for (const auto& c : candidates) {
    if (len_of(c) != median) continue;
    if (!pick || id_of(c) < id_of(*pick)) pick = &c;
  }
  return *pick->session;
}

}  // namespace tracemine
