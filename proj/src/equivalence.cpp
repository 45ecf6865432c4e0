#include "trajmark/equivalence.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "trajmark/error.hpp"
#include "trajmark/injector.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::VR: return "VR";
    case Scheme::PGR: return "PGR";
    case Scheme::IA: return "IA";
    case Scheme::AE: return "AE";
    case Scheme::CE: return "CE";
  }
  return "?";
}

Scheme scheme_from_string(std::string_view s) {
  for (auto scheme : kAllSchemes)
    if (to_string(scheme) == s) return scheme;
  throw Error(ErrorCode::ManifestError, "unknown scheme '" + std::string(s) + "'");
}

const ParamMapping& EquivalenceSet::mapping(std::size_t from, std::size_t to) const {
  auto it = mappings.find({from, to});
  if (it == mappings.end())
    throw Error(ErrorCode::MappingGap, id + ": no mapping " + std::to_string(from) + "->" + std::to_string(to));
  return it->second;
}

namespace {

[[noreturn]] void manifest_error(const EquivalenceSet& set, const std::string& what) {
  throw Error(ErrorCode::ManifestError, "set '" + set.id + "': " + what);
}

bool pattern_binds(const ActionPattern& p, std::string_view slot) {
  return std::any_of(p.args.begin(), p.args.end(), [&](const PatternArg& a) { return a.is_slot() && a.slot() == slot; });
}

}  // namespace

void check_equivalence_set(const EquivalenceSet& set) {
  if (set.id.empty()) manifest_error(set, "empty id");
  if (set.members.size() < 2) manifest_error(set, "needs at least two members");
  for (std::size_t m = 0; m < set.members.size(); ++m) {
    const auto& member = set.members[m];
    if (member.patterns.empty()) manifest_error(set, "member " + std::to_string(m) + " is empty");
    for (const auto& p : member.patterns) {
      if (!is_valid_tool_name(p.tool)) manifest_error(set, "invalid tool name '" + p.tool + "'");
      std::set<std::string> names, slots;
      for (const auto& a : p.args) {
        if (!names.insert(a.name).second) manifest_error(set, p.tool + ": duplicate argument " + a.name);
        if (a.is_slot() && !slots.insert(a.slot()).second)
          manifest_error(set, p.tool + ": duplicate slot " + a.slot());
      }
    }
  }
  for (std::size_t from = 0; from < set.members.size(); ++from) {
    for (std::size_t to = 0; to < set.members.size(); ++to) {
      if (from == to) continue;
      auto it = set.mappings.find({from, to});
      const std::string tag = "mapping " + std::to_string(from) + "->" + std::to_string(to);
      if (it == set.mappings.end()) manifest_error(set, "missing " + tag);
      const auto& target = set.members[to];
      const auto& source = set.members[from];
      if (it->second.actions.size() != target.size()) manifest_error(set, tag + " has wrong action count");
      for (std::size_t a = 0; a < target.size(); ++a) {
        const auto& entries = it->second.actions[a];
        for (const auto& arg : target.patterns[a].args) {
          if (!arg.is_slot()) continue;
          if (!entries.count(arg.name)) manifest_error(set, tag + " leaves " + target.patterns[a].tool + "." + arg.name + " unmapped");
        }
        for (const auto& [name, src] : entries) {
          auto parg = std::find_if(target.patterns[a].args.begin(), target.patterns[a].args.end(),
                                   [&](const PatternArg& x) { return x.name == name; });
          if (parg == target.patterns[a].args.end() || !parg->is_slot())
            manifest_error(set, tag + " maps non-slot argument " + name);
          if (const auto* ref = std::get_if<SlotRef>(&src)) {
            if (ref->action >= source.size() || !pattern_binds(source.patterns[ref->action], ref->slot))
              manifest_error(set, tag + " references unbound slot " + ref->slot);
          }
        }
      }
    }
  }
}

std::optional<Bindings> match_segment(const Segment& member, std::span<const Action> actions) {
  if (actions.size() < member.size()) return std::nullopt;
  Bindings b;
  for (std::size_t k = 0; k < member.size(); ++k) {
    const auto& p = member.patterns[k];
    const auto& a = actions[k];
    if (a.tool != p.tool || a.args.size() != p.args.size()) return std::nullopt;
    for (const auto& pa : p.args) {
      const Value* v = a.arg(pa.name);
      if (!v) return std::nullopt;
      if (!pa.is_slot()) {
        if (!(*v == pa.fixed())) return std::nullopt;
        continue;
      }
      auto [it, inserted] = b.try_emplace(pa.slot(), *v);
      if (!inserted && !(it->second == *v)) return std::nullopt;
    }
  }
  return b;
}

std::vector<Action> instantiate(const Segment& member, const Bindings& bindings) {
  std::vector<Action> out;
  out.reserve(member.size());
  for (const auto& p : member.patterns) {
    Action a{p.tool, {}};
    for (const auto& pa : p.args) {
      if (!pa.is_slot()) {
        a.args.emplace_back(pa.name, pa.fixed());
        continue;
      }
      auto it = bindings.find(pa.slot());
      if (it == bindings.end()) throw Error(ErrorCode::MappingGap, p.tool + ": slot " + pa.slot() + " unbound");
      a.args.emplace_back(pa.name, it->second);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Action> rewrite_member(const EquivalenceSet& set, std::size_t from, std::size_t to,
                                   const Bindings& bindings) {
  if (from >= set.arity() || to >= set.arity())
    throw Error(ErrorCode::IndexOutOfRange, set.id + ": member index out of range");
  if (from == to) return instantiate(set.members[from], bindings);
  const auto& map = set.mapping(from, to);
  const auto& target = set.members[to];
  std::vector<Action> out;
  out.reserve(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    const auto& p = target.patterns[k];
    Action a{p.tool, {}};
    for (const auto& pa : p.args) {
      if (!pa.is_slot()) {
        a.args.emplace_back(pa.name, pa.fixed());
        continue;
      }
      if (k >= map.actions.size())
        throw Error(ErrorCode::MappingGap, set.id + ": mapping has no entry for action " + std::to_string(k));
      auto src = map.actions[k].find(pa.name);
      if (src == map.actions[k].end())
        throw Error(ErrorCode::MappingGap, set.id + ": no source for " + p.tool + "." + pa.name);
      if (const auto* lit = std::get_if<Value>(&src->second)) {
        a.args.emplace_back(pa.name, *lit);
        continue;
      }
      const auto& ref = std::get<SlotRef>(src->second);
      auto it = bindings.find(ref.slot);
      if (it == bindings.end())
        throw Error(ErrorCode::MappingGap, set.id + ": source slot " + ref.slot + " unbound");
      a.args.emplace_back(pa.name, it->second);
    }
    out.push_back(std::move(a));
  }
  if (!match_segment(target, out))
    throw Error(ErrorCode::MappingGap, set.id + ": rewrite " + std::to_string(from) + "->" + std::to_string(to) +
                                           " violates the target's slot constraints");
  return out;
}

const WatermarkPass& PassPool::by_id(int pass_id) const {
  if (pass_id < 1 || static_cast<std::size_t>(pass_id) > passes.size())
    throw Error(ErrorCode::IndexOutOfRange, "no pass " + std::to_string(pass_id));
  return passes[static_cast<std::size_t>(pass_id - 1)];
}

// ---- JSON -----------------------------------------------------------------

namespace {

json to_json(const Segment& s) {
  json arr = json::array();
  for (const auto& p : s.patterns) {
    json args = json::array();
    for (const auto& a : p.args) {
      if (a.is_slot())
        args.push_back({{"name", a.name}, {"slot", a.slot()}});
      else
        args.push_back({{"name", a.name}, {"value", trajmark::to_json(a.fixed())}});
    }
    arr.push_back({{"tool", p.tool}, {"args", std::move(args)}});
  }
  return arr;
}

Segment segment_from_json(const json& j) {
  Segment s;
  for (const auto& jp : j) {
    ActionPattern p;
    p.tool = jp.at("tool").get<std::string>();
    for (const auto& ja : jp.at("args")) {
      PatternArg a;
      a.name = ja.at("name").get<std::string>();
      if (ja.contains("slot"))
        a.binding = ja.at("slot").get<std::string>();
      else
        a.binding = value_from_json(ja.at("value"));
      p.args.push_back(std::move(a));
    }
    s.patterns.push_back(std::move(p));
  }
  return s;
}

json mappings_to_json(const EquivalenceSet& set) {
  json arr = json::array();
  for (const auto& [key, map] : set.mappings) {
    json actions = json::array();
    for (const auto& entries : map.actions) {
      json obj = json::object();
      for (const auto& [name, src] : entries) {
        if (const auto* ref = std::get_if<SlotRef>(&src))
          obj[name] = {{"action", ref->action}, {"slot", ref->slot}};
        else
          obj[name] = {{"literal", trajmark::to_json(std::get<Value>(src))}};
      }
      actions.push_back(std::move(obj));
    }
    arr.push_back({{"from", key.first}, {"to", key.second}, {"actions", std::move(actions)}});
  }
  return arr;
}

void mappings_from_json(const json& j, EquivalenceSet& set) {
  for (const auto& jm : j) {
    ParamMapping map;
    for (const auto& jobj : jm.at("actions")) {
      std::map<std::string, ArgSource> entries;
      for (const auto& [name, src] : jobj.items()) {
        if (src.contains("literal"))
          entries.emplace(name, value_from_json(src.at("literal")));
        else
          entries.emplace(name, SlotRef{src.at("action").get<std::size_t>(), src.at("slot").get<std::string>()});
      }
      map.actions.push_back(std::move(entries));
    }
    set.mappings[{jm.at("from").get<std::size_t>(), jm.at("to").get<std::size_t>()}] = std::move(map);
  }
}

void put_set_fields(json& j, const EquivalenceSet& set) {
  json members = json::array();
  for (const auto& m : set.members) members.push_back(to_json(m));
  j["members"] = std::move(members);
  j["mappings"] = mappings_to_json(set);
}

EquivalenceSet set_from_fields(const json& j, std::string id, Scheme scheme) {
  EquivalenceSet set;
  set.id = std::move(id);
  set.scheme = scheme;
  for (const auto& jm : j.at("members")) set.members.push_back(segment_from_json(jm));
  mappings_from_json(j.at("mappings"), set);
  check_equivalence_set(set);
  return set;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ManifestError, path + ": " + e.what());
  }
}

}  // namespace

json to_json(const EquivalenceSet& set) {
  json j;
  j["id"] = set.id;
  j["scheme"] = std::string(to_string(set.scheme));
  put_set_fields(j, set);
  return j;
}

EquivalenceSet eqset_from_json(const json& j) {
  try {
    return set_from_fields(j, j.at("id").get<std::string>(), scheme_from_string(j.at("scheme").get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("equivalence set: ") + e.what());
  }
}

json to_json(const PassPool& pool) {
  json passes = json::array();
  for (const auto& p : pool.passes) {
    json jp;
    jp["pass_id"] = p.pass_id;
    jp["set_id"] = p.eqset.id;
    jp["scheme"] = std::string(to_string(p.eqset.scheme));
    jp["order_rank"] = p.order_rank;
    jp["delta"] = p.delta;
    jp["target_index"] = p.target_index;
    jp["natural"] = p.natural.weights();
    jp["biased"] = p.biased.weights();
    put_set_fields(jp, p.eqset);
    passes.push_back(std::move(jp));
  }
  json j;
  j["format"] = "trajmark-pool";
  j["format_version"] = kPoolFormatVersion;
  j["domain"] = pool.domain;
  j["uid_bit_order"] = "bit i (LSB = 0) activates pass_id i+1";
  j["tools"] = to_json(pool.tools);
  j["passes"] = std::move(passes);
  return j;
}

PassPool pool_from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != "trajmark-pool")
      throw Error(ErrorCode::ManifestError, "not a trajmark pool file");
    if (j.at("format_version").get<int>() != kPoolFormatVersion)
      throw Error(ErrorCode::ManifestError, "unsupported pool format version");
    PassPool pool;
    pool.domain = j.at("domain").get<std::string>();
    pool.tools = library_from_json(j.at("tools"));
    std::set<int> ranks;
    for (const auto& jp : j.at("passes")) {
      WatermarkPass p;
      p.pass_id = jp.at("pass_id").get<int>();
      p.eqset = set_from_fields(jp, jp.at("set_id").get<std::string>(),
                                scheme_from_string(jp.at("scheme").get<std::string>()));
      p.order_rank = jp.at("order_rank").get<int>();
      p.delta = jp.at("delta").get<double>();
      p.target_index = jp.at("target_index").get<std::size_t>();
      p.natural = Distribution(jp.at("natural").get<std::vector<double>>());
      p.biased = Distribution(jp.at("biased").get<std::vector<double>>());
      if (p.natural.size() != p.eqset.arity())
        throw Error(ErrorCode::ManifestError, "pass " + std::to_string(p.pass_id) + ": natural arity mismatch");
      if (!(derive_target_distribution(p.natural, p.target_index, p.delta) == p.biased))
        throw Error(ErrorCode::ManifestError,
                    "pass " + std::to_string(p.pass_id) + ": biased distribution does not match natural/target/delta");
      if (!ranks.insert(p.order_rank).second)
        throw Error(ErrorCode::ManifestError, "duplicate order_rank " + std::to_string(p.order_rank));
      pool.passes.push_back(std::move(p));
    }
    std::sort(pool.passes.begin(), pool.passes.end(),
              [](const WatermarkPass& a, const WatermarkPass& b) { return a.pass_id < b.pass_id; });
    for (std::size_t i = 0; i < pool.passes.size(); ++i)
      if (pool.passes[i].pass_id != static_cast<int>(i + 1))
        throw Error(ErrorCode::ManifestError, "pass ids must be exactly 1..N");
    return pool;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("pool: ") + e.what());
  }
}

PassPool load_pool(const std::string& path) { return pool_from_json(read_json_file(path)); }

void save_pool(const std::string& path, const PassPool& pool) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << to_json(pool).dump(1) << '\n';
}

json to_json(const Manifest& m) {
  json c = json::array();
  for (const auto& s : m.candidates) c.push_back(to_json(s));
  return json{{"domain", m.domain}, {"candidates", std::move(c)}};
}

Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.domain = j.at("domain").get<std::string>();
    std::set<std::string> ids;
    for (const auto& jc : j.at("candidates")) {
      m.candidates.push_back(eqset_from_json(jc));
      if (!ids.insert(m.candidates.back().id).second)
        throw Error(ErrorCode::ManifestError, "duplicate candidate id " + m.candidates.back().id);
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("manifest: ") + e.what());
  }
}

Manifest load_manifest(const std::string& path) { return manifest_from_json(read_json_file(path)); }

// ---- estimation -------------------------------------------------------------

MemberCounts count_members(const Corpus& corpus, const EquivalenceSet& set) {
  SetMatcher matcher(set);
  MemberCounts mc;
  mc.counts.assign(set.arity(), 0.0);
  for (const auto& t : corpus) matcher.count(t.actions, mc.counts, mc.total);
  return mc;
}

std::pair<Distribution, std::size_t> estimate_natural_distribution(const Corpus& corpus, const EquivalenceSet& set) {
  if (corpus.empty()) throw Error(ErrorCode::NoObservations, set.id + ": empty corpus");
  auto mc = count_members(corpus, set);
  if (mc.total == 0) throw Error(ErrorCode::NoObservations, set.id + ": no member occurs in the corpus");
  return {Distribution::from_counts(mc.counts), mc.total};
}

// ---- execution-based validation ----------------------------------------------

SandboxState generate_environment(const ToolLibrary& lib, std::span<const Action> a, std::span<const Action> b,
                                  const SandboxSpec& spec, Engine& rng) {
  std::set<std::string> keys;
  for (auto seg : {a, b}) {
    auto dry = execute_segment(lib, seg, {});
    for (const auto& e : dry.log)
      if (e.kind == "read") keys.insert(e.key);
  }
  SandboxState env;
  for (const auto& k : keys) {
    if (!bernoulli(rng, spec.key_presence)) continue;
    env[k] = spec.content_alphabet[uniform_int(rng, 0, spec.content_alphabet.size() - 1)];
  }
  return env;
}

bool equivalent_on(const ToolLibrary& lib, std::span<const Action> a, std::span<const Action> b,
                   const SandboxState& env, bool erase_ancillary, std::string* detail) {
  const auto ca = canonicalize(execute_segment(lib, a, env), env, erase_ancillary);
  const auto cb = canonicalize(execute_segment(lib, b, env), env, erase_ancillary);
  if (ca == cb) return true;
  if (detail) {
    auto show = [](const CanonicalEffects& c) {
      std::string s = "output=" + c.output + " effects=[";
      for (std::size_t i = 0; i < c.entries.size(); ++i) s += (i ? "; " : "") + c.entries[i];
      return s + "]";
    };
    *detail = show(ca) + " vs " + show(cb);
  }
  return false;
}

namespace {

std::vector<std::string> slot_names(const Segment& s) {
  std::vector<std::string> out;
  for (const auto& p : s.patterns)
    for (const auto& a : p.args)
      if (a.is_slot() && std::find(out.begin(), out.end(), a.slot()) == out.end()) out.push_back(a.slot());
  return out;
}

}  // namespace

ValidationReport validate_equivalence(const EquivalenceSet& set, const SandboxSpec& sandbox, std::size_t n_cases,
                                      std::uint64_t rng_seed) {
  for (const auto& m : set.members)
    for (const auto& p : m.patterns)
      if (!sandbox.tools.contains(p.tool)) throw Error(ErrorCode::UnknownTool, set.id + ": " + p.tool);
  if (sandbox.slot_alphabet.empty() || sandbox.content_alphabet.empty())
    throw Error(ErrorCode::InvalidRange, "sandbox alphabets must be non-empty");

  const bool erase = set.scheme == Scheme::AE;
  Engine rng(derive_seed(rng_seed, {"validate", set.id}));
  ValidationReport report;
  report.set_id = set.id;
  try {
    for (std::size_t c = 0; c < n_cases; ++c) {
      for (std::size_t from = 0; from < set.arity(); ++from) {
        Bindings b;
        for (const auto& slot : slot_names(set.members[from]))
          b[slot] = sandbox.slot_alphabet[uniform_int(rng, 0, sandbox.slot_alphabet.size() - 1)];
        const auto src = instantiate(set.members[from], b);
        for (std::size_t to = 0; to < set.arity(); ++to) {
          if (to == from) continue;
          const auto dst = rewrite_member(set, from, to, b);
          const auto env = generate_environment(sandbox.tools, src, dst, sandbox, rng);
          std::string detail;
          if (!equivalent_on(sandbox.tools, src, dst, env, erase, &detail)) {
            report.cases_run = c + 1;
            report.counterexample = Counterexample{c, from, to, src, dst, env, detail};
            return report;
          }
        }
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArguments || e.code() == ErrorCode::MappingGap)
      throw Error(ErrorCode::ExecutionFailure, set.id + ": " + e.what());
    throw;
  }
  report.cases_run = n_cases;
  report.valid = true;
  return report;
}

}  // namespace trajmark
