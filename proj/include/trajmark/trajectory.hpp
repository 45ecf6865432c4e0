#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace trajmark {

/// Scalar tool-argument value. Nested objects and arrays are rejected at parse time.
using Value = std::variant<bool, std::int64_t, double, std::string>;

std::string to_text(const Value& v);
nlohmann::ordered_json to_json(const Value& v);
Value value_from_json(const nlohmann::ordered_json& j);

struct Action {
  std::string tool;
  // Kept in wire order; matching looks arguments up by name.
  std::vector<std::pair<std::string, Value>> args;

  const Value* arg(std::string_view name) const;
  bool operator==(const Action&) const = default;
};

bool is_valid_tool_name(std::string_view name);

/// Throws SchemaViolation if the tool name or argument names are invalid.
void check_action(const Action& a);

struct GreyBoxTrajectory {
  std::string query_id;
  std::optional<std::string> user_uid;
  std::vector<Action> actions;
  std::string response;

  bool operator==(const GreyBoxTrajectory&) const = default;
};

struct Step {
  std::string thought;
  Action action;
  std::string observation;

  bool operator==(const Step&) const = default;
};

struct FullTrajectory {
  std::string query_id;
  std::vector<Step> steps;
  std::string response;

  bool operator==(const FullTrajectory&) const = default;
};

using Corpus = std::vector<GreyBoxTrajectory>;

Action action_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const Action& a);

GreyBoxTrajectory parse_trajectory_line(std::string_view line);
std::string serialize_trajectory(const GreyBoxTrajectory& t);

GreyBoxTrajectory grey_box_view(const FullTrajectory& t);

/// Whitespace-delimited token count over every textual field a reader would see.
std::size_t token_count(const GreyBoxTrajectory& t);
std::size_t token_count(const FullTrajectory& t);

/// JSONL corpus helpers. Blank lines are skipped; errors carry the 1-based line number.
Corpus read_corpus(std::istream& in);
Corpus read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus_file(const std::string& path, const Corpus& corpus);

}  // namespace trajmark
