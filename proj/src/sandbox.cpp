#include "trajmark/sandbox.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "trajmark/error.hpp"
#include "trajmark/rng.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;

void ToolLibrary::add(ToolSpec tool) {
  if (!is_valid_tool_name(tool.name)) throw Error(ErrorCode::ManifestError, "invalid tool name '" + tool.name + "'");
  std::string name = tool.name;
  tools_.insert_or_assign(std::move(name), std::move(tool));
}

const ToolSpec* ToolLibrary::find(std::string_view name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

namespace {

const char* op_name(Effect::Op op) {
  switch (op) {
    case Effect::Op::Read: return "read";
    case Effect::Op::Write: return "write";
    case Effect::Op::Erase: return "erase";
    case Effect::Op::Log: return "log";
    case Effect::Op::Derive: return "derive";
  }
  return "?";
}

Effect::Op op_from_name(const std::string& s) {
  if (s == "read") return Effect::Op::Read;
  if (s == "write") return Effect::Op::Write;
  if (s == "erase") return Effect::Op::Erase;
  if (s == "log") return Effect::Op::Log;
  if (s == "derive") return Effect::Op::Derive;
  throw Error(ErrorCode::ManifestError, "unknown effect op '" + s + "'");
}

}  // namespace

json to_json(const ToolSpec& t) {
  json effects = json::array();
  for (const auto& e : t.effects) {
    json je;
    je["op"] = op_name(e.op);
    switch (e.op) {
      case Effect::Op::Read: je["key"] = e.key; je["into"] = e.into; break;
      case Effect::Op::Write: je["key"] = e.key; je["value"] = e.text; break;
      case Effect::Op::Erase: je["key"] = e.key; break;
      case Effect::Op::Log: je["entry"] = e.text; break;
      case Effect::Op::Derive: je["fn"] = e.fn; je["inputs"] = e.inputs; je["into"] = e.into; break;
    }
    effects.push_back(std::move(je));
  }
  return json{{"name", t.name}, {"params", t.params}, {"ancillary", t.ancillary},
              {"effects", std::move(effects)}, {"returns", t.returns}};
}

ToolSpec tool_from_json(const json& j) {
  try {
    ToolSpec t;
    t.name = j.at("name").get<std::string>();
    t.params = j.at("params").get<std::vector<std::string>>();
    t.ancillary = j.value("ancillary", false);
    t.returns = j.value("returns", std::string{});
    for (const auto& je : j.at("effects")) {
      Effect e;
      e.op = op_from_name(je.at("op").get<std::string>());
      e.key = je.value("key", std::string{});
      e.into = je.value("into", std::string{});
      e.fn = je.value("fn", std::string{});
      if (e.op == Effect::Op::Write) e.text = je.at("value").get<std::string>();
      if (e.op == Effect::Op::Log) e.text = je.at("entry").get<std::string>();
      if (e.op == Effect::Op::Derive) e.inputs = je.at("inputs").get<std::vector<std::string>>();
      t.effects.push_back(std::move(e));
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("tool spec: ") + e.what());
  }
}

json to_json(const ToolLibrary& lib) {
  json arr = json::array();
  for (const auto& [name, t] : lib.tools()) arr.push_back(to_json(t));
  return arr;
}

ToolLibrary library_from_json(const json& j) {
  ToolLibrary lib;
  for (const auto& t : j) lib.add(tool_from_json(t));
  return lib;
}

namespace {

using Locals = std::map<std::string, std::string, std::less<>>;

std::string expand(std::string_view tmpl, const Locals& locals, std::string_view tool) {
  std::string out;
  out.reserve(tmpl.size() + 16);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out += tmpl[i];
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos)
      throw Error(ErrorCode::ExecutionFailure, std::string(tool) + ": unterminated template");
    const auto name = tmpl.substr(i + 1, close - i - 1);
    auto it = locals.find(name);
    if (it == locals.end())
      throw Error(ErrorCode::ExecutionFailure, std::string(tool) + ": unbound name '" + std::string(name) + "'");
    out += it->second;
    i = close;
  }
  return out;
}

std::string derive(const std::string& fn, const std::vector<std::string>& in, std::string_view tool) {
  std::string joined;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i) joined += '|';
    joined += in[i];
  }
  if (fn == "concat") return joined;
  if (fn == "upper") {
    std::transform(joined.begin(), joined.end(), joined.begin(), [](unsigned char c) { return std::toupper(c); });
    return joined;
  }
  if (fn == "lower") {
    std::transform(joined.begin(), joined.end(), joined.begin(), [](unsigned char c) { return std::tolower(c); });
    return joined;
  }
  if (fn == "reverse") return {joined.rbegin(), joined.rend()};
  if (fn == "length") return std::to_string(joined.size());
  if (fn == "hash") {
    static constexpr char kHex[] = "0123456789abcdef";
    std::uint64_t h = hash_text(joined);
    std::string s(8, '0');
    for (int i = 7; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    return s;
  }
  throw Error(ErrorCode::ExecutionFailure, std::string(tool) + ": unknown derive fn '" + fn + "'");
}

}  // namespace

ExecutionResult execute_segment(const ToolLibrary& lib, std::span<const Action> actions, const SandboxState& env) {
  ExecutionResult r;
  r.state = env;
  for (const auto& a : actions) {
    const ToolSpec* spec = lib.find(a.tool);
    if (!spec) throw Error(ErrorCode::UnknownTool, a.tool);
    if (a.args.size() != spec->params.size())
      throw Error(ErrorCode::InvalidArguments, a.tool + ": expected " + std::to_string(spec->params.size()) +
                                                   " arguments, got " + std::to_string(a.args.size()));
    Locals locals;
    for (const auto& p : spec->params) {
      const Value* v = a.arg(p);
      if (!v) throw Error(ErrorCode::InvalidArguments, a.tool + ": missing argument '" + p + "'");
      locals.emplace(p, to_text(*v));
    }
    for (const auto& e : spec->effects) {
      switch (e.op) {
        case Effect::Op::Read: {
          auto key = expand(e.key, locals, a.tool);
          auto it = r.state.find(key);
          std::string value = it == r.state.end() ? std::string(kMissing) : it->second;
          r.log.push_back({a.tool, "read", key, value, spec->ancillary});
          locals.insert_or_assign(e.into, std::move(value));
          break;
        }
        case Effect::Op::Write: {
          auto key = expand(e.key, locals, a.tool);
          auto value = expand(e.text, locals, a.tool);
          r.log.push_back({a.tool, "write", key, value, spec->ancillary});
          r.state.insert_or_assign(std::move(key), std::move(value));
          break;
        }
        case Effect::Op::Erase: {
          auto key = expand(e.key, locals, a.tool);
          r.log.push_back({a.tool, "erase", key, {}, spec->ancillary});
          r.state.erase(key);
          break;
        }
        case Effect::Op::Log:
          r.log.push_back({a.tool, "log", {}, expand(e.text, locals, a.tool), spec->ancillary});
          break;
        case Effect::Op::Derive: {
          std::vector<std::string> in;
          for (const auto& t : e.inputs) in.push_back(expand(t, locals, a.tool));
          locals.insert_or_assign(e.into, derive(e.fn, in, a.tool));
          break;
        }
      }
    }
    r.outputs.push_back(expand(spec->returns, locals, a.tool));
    r.ancillary.push_back(spec->ancillary);
  }
  return r;
}

CanonicalEffects canonicalize(const ExecutionResult& r, const SandboxState& initial, bool erase_ancillary) {
  CanonicalEffects c;
  for (std::size_t i = r.outputs.size(); i-- > 0;) {
    if (erase_ancillary && r.ancillary[i]) continue;
    c.output = r.outputs[i];
    break;
  }
  std::set<std::string> keys;
  for (const auto& [k, v] : initial) keys.insert(k);
  for (const auto& [k, v] : r.state) keys.insert(k);
  for (const auto& k : keys) {
    auto before = initial.find(k);
    auto after = r.state.find(k);
    if (after == r.state.end()) {
      if (before != initial.end()) c.entries.push_back("del " + k);
    } else if (before == initial.end() || before->second != after->second) {
      c.entries.push_back("set " + k + "=" + after->second);
    }
  }
  for (const auto& e : r.log) {
    if (e.kind != "log") continue;
    if (erase_ancillary && e.ancillary) continue;
    c.entries.push_back("log " + e.value);
  }
  return c;
}

}  // namespace trajmark
