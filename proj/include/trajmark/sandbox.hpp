#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajmark/trajectory.hpp"

namespace trajmark {

// Closed effect vocabulary of the deterministic tool sandbox. Templates use
// `{name}` to splice in a tool parameter or a local bound by read/derive.
struct Effect {
  enum class Op { Read, Write, Erase, Log, Derive };

  Op op = Op::Log;
  std::string key;                  // read/write/erase: key template
  std::string text;                 // write: value template; log: entry template
  std::string into;                 // read/derive: local name
  std::string fn;                   // derive: concat|upper|lower|reverse|hash|length
  std::vector<std::string> inputs;  // derive: argument templates

  bool operator==(const Effect&) const = default;
};

struct ToolSpec {
  std::string name;
  std::vector<std::string> params;
  std::vector<Effect> effects;
  std::string returns;
  // Read-only helper whose log entries may be erased for auxiliary-equivalence comparisons.
  bool ancillary = false;

  bool operator==(const ToolSpec&) const = default;
};

class ToolLibrary {
 public:
  void add(ToolSpec tool);
  const ToolSpec* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::size_t size() const { return tools_.size(); }
  const std::map<std::string, ToolSpec, std::less<>>& tools() const { return tools_; }

 private:
  std::map<std::string, ToolSpec, std::less<>> tools_;
};

nlohmann::ordered_json to_json(const ToolSpec& t);
ToolSpec tool_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const ToolLibrary& lib);
ToolLibrary library_from_json(const nlohmann::ordered_json& j);

using SandboxState = std::map<std::string, std::string>;

struct LogEntry {
  std::string tool;
  std::string kind;  // read | write | erase | log
  std::string key;
  std::string value;
  bool ancillary = false;

  bool operator==(const LogEntry&) const = default;
};

struct ExecutionResult {
  std::vector<std::string> outputs;  // one per action
  std::vector<bool> ancillary;       // one per action
  SandboxState state;
  std::vector<LogEntry> log;
};

/// Value bound by a read of an absent key.
inline constexpr std::string_view kMissing = "<missing>";

/// Runs the actions in order against a copy of `env`.
/// Throws UnknownTool or InvalidArguments (argument names must equal the tool's params).
ExecutionResult execute_segment(const ToolLibrary& lib, std::span<const Action> actions, const SandboxState& env);

/// Comparable view of an execution: final output, net state diff and external log.
struct CanonicalEffects {
  std::string output;
  std::vector<std::string> entries;

  bool operator==(const CanonicalEffects&) const = default;
};

/// With erase_ancillary, entries produced by ancillary tools are dropped and the
/// output is taken from the last non-ancillary action.
CanonicalEffects canonicalize(const ExecutionResult& r, const SandboxState& initial, bool erase_ancillary);

}  // namespace trajmark
