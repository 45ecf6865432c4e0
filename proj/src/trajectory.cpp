#include "trajmark/trajectory.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "trajmark/error.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;

std::string to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, double>) {
          return json(x).dump();
        } else {
          return std::to_string(x);
        }
      },
      v);
}

json to_json(const Value& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

Value value_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::boolean:
      return j.get<bool>();
    case json::value_t::number_integer:
      return j.get<std::int64_t>();
    case json::value_t::number_unsigned: {
      const auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX))
        throw Error(ErrorCode::SchemaViolation, "integer argument out of range");
      return static_cast<std::int64_t>(u);
    }
    case json::value_t::number_float:
      return j.get<double>();
    case json::value_t::string:
      return j.get<std::string>();
    default:
      throw Error(ErrorCode::SchemaViolation,
                  std::string("argument values must be scalars, got ") + j.type_name());
  }
}

const Value* Action::arg(std::string_view name) const {
  for (const auto& [k, v] : args)
    if (k == name) return &v;
  return nullptr;
}

bool is_valid_tool_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

void check_action(const Action& a) {
  if (!is_valid_tool_name(a.tool))
    throw Error(ErrorCode::SchemaViolation, "invalid tool name '" + a.tool + "'");
  std::set<std::string_view> seen;
  for (const auto& [k, v] : a.args)
    if (!seen.insert(k).second)
      throw Error(ErrorCode::SchemaViolation, "duplicate argument '" + k + "' on " + a.tool);
}

namespace {

const json& require(const json& obj, const char* key, json::value_t type, const char* type_name) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::SchemaViolation, std::string("missing field '") + key + "'");
  if (it->type() != type)
    throw Error(ErrorCode::SchemaViolation, std::string("field '") + key + "' must be " + type_name);
  return *it;
}

bool is_lower_hex(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

}  // namespace

Action action_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "action must be an object");
  Action a;
  a.tool = require(j, "tool", json::value_t::string, "a string").get<std::string>();
  const auto& args = require(j, "args", json::value_t::object, "an object");
  // nlohmann silently keeps the last of duplicate keys, so duplicates cannot reach here.
  for (const auto& [k, v] : args.items()) a.args.emplace_back(k, value_from_json(v));
  check_action(a);
  return a;
}

json to_json(const Action& a) {
  json args = json::object();
  for (const auto& [k, v] : a.args) args[k] = to_json(v);
  return json{{"tool", a.tool}, {"args", std::move(args)}};
}

GreyBoxTrajectory parse_trajectory_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedLine, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "trajectory must be a JSON object");

  GreyBoxTrajectory t;
  t.query_id = require(j, "query_id", json::value_t::string, "a string").get<std::string>();
  if (auto it = j.find("user_uid"); it != j.end() && !it->is_null()) {
    if (!it->is_string() || !is_lower_hex(it->get_ref<const std::string&>()))
      throw Error(ErrorCode::SchemaViolation, "user_uid must be a lowercase hex string");
    t.user_uid = it->get<std::string>();
  }
  const auto& actions = require(j, "actions", json::value_t::array, "an array");
  for (const auto& a : actions) t.actions.push_back(action_from_json(a));
  t.response = require(j, "response", json::value_t::string, "a string").get<std::string>();
  if (t.actions.empty()) throw Error(ErrorCode::EmptyActions, "query " + t.query_id + " has no actions");
  return t;
}

std::string serialize_trajectory(const GreyBoxTrajectory& t) {
  json j;
  j["query_id"] = t.query_id;
  if (t.user_uid) j["user_uid"] = *t.user_uid;
  json actions = json::array();
  for (const auto& a : t.actions) actions.push_back(to_json(a));
  j["actions"] = std::move(actions);
  j["response"] = t.response;
  return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

GreyBoxTrajectory grey_box_view(const FullTrajectory& t) {
  GreyBoxTrajectory g;
  g.query_id = t.query_id;
  g.actions.reserve(t.steps.size());
  for (const auto& s : t.steps) g.actions.push_back(s.action);
  g.response = t.response;
  return g;
}

namespace {

std::size_t words(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::size_t action_tokens(const Action& a) {
  std::size_t n = 1;
  for (const auto& [k, v] : a.args) n += 1 + words(to_text(v));
  return n;
}

}  // namespace

std::size_t token_count(const GreyBoxTrajectory& t) {
  std::size_t n = words(t.response);
  for (const auto& a : t.actions) n += action_tokens(a);
  return n;
}

std::size_t token_count(const FullTrajectory& t) {
  std::size_t n = words(t.response);
  for (const auto& s : t.steps) n += words(s.thought) + action_tokens(s.action) + words(s.observation);
  return n;
}

Corpus read_corpus(std::istream& in) {
  Corpus out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_trajectory_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& t : corpus) out << serialize_trajectory(t) << '\n';
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write_corpus(out, corpus);
}

}  // namespace trajmark
