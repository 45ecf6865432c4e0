#include "trajmark/domain.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "trajmark/error.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const EquivalenceSet* DomainSpec::set(std::string_view id) const {
  for (const auto& s : manifest.candidates)
    if (s.id == id) return &s;
  return nullptr;
}

std::vector<std::string> DomainSpec::slot_set_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& t : templates)
    for (const auto& s : t.steps)
      if (s.is_slot() && seen.insert(s.set_id).second) ids.push_back(s.set_id);
  return ids;
}

void check_domain(const DomainSpec& d) {
  auto fail = [&](const std::string& what) { throw Error(ErrorCode::SchemaViolation, "domain " + d.name + ": " + what); };
  if (d.name.empty()) fail("empty name");
  if (d.templates.empty()) fail("no templates");
  for (const auto& t : d.templates) {
    if (!(t.weight > 0)) fail("template " + t.id + " has non-positive weight");
    for (const auto& s : t.steps) {
      if (s.is_slot()) {
        const auto* set = d.set(s.set_id);
        if (!set) fail("template " + t.id + " uses unknown set " + s.set_id);
        auto nat = d.natural.find(s.set_id);
        if (nat == d.natural.end()) fail("no natural distribution for " + s.set_id);
        if (nat->second.size() != set->arity()) fail("natural distribution arity mismatch for " + s.set_id);
        continue;
      }
      const auto* tool = d.tools.find(s.tool);
      if (!tool) fail("template " + t.id + " uses unknown tool " + s.tool);
      if (tool->params.size() != s.args.size()) fail("template " + t.id + ": arity mismatch for " + s.tool);
      for (const auto& a : s.args)
        if (std::find(tool->params.begin(), tool->params.end(), a.name) == tool->params.end())
          fail("template " + t.id + ": " + s.tool + " has no parameter " + a.name);
    }
  }
}

json to_json(const DomainSpec& d, const std::string& manifest_file) {
  json natural = json::object();
  for (const auto& [id, dist] : d.natural) natural[id] = dist.weights();
  json pools = json::object();
  for (const auto& [name, values] : d.value_pools) {
    json arr = json::array();
    for (const auto& v : values) arr.push_back(to_json(v));
    pools[name] = std::move(arr);
  }
  json templates = json::array();
  for (const auto& t : d.templates) {
    json steps = json::array();
    for (const auto& s : t.steps) {
      if (s.is_slot()) {
        steps.push_back({{"set", s.set_id}});
        continue;
      }
      json args = json::array();
      for (const auto& a : s.args) args.push_back({{"name", a.name}, {"pool", a.pool}});
      steps.push_back({{"tool", s.tool}, {"args", std::move(args)}});
    }
    templates.push_back({{"id", t.id}, {"weight", t.weight}, {"steps", std::move(steps)}});
  }
  return json{{"format", "trajmark-domain"},
              {"name", d.name},
              {"manifest", manifest_file},
              {"delta", d.delta},
              {"sizes",
               {{"calibration", d.sizes.calibration},
                {"finetune", d.sizes.finetune},
                {"verification", d.sizes.verification}}},
              {"fallback_pool_size", d.fallback_pool_size},
              {"natural", std::move(natural)},
              {"value_pools", std::move(pools)},
              {"tools", to_json(d.tools)},
              {"templates", std::move(templates)}};
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, path + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace

DomainSpec load_domain(const std::string& path) {
  const json j = read_json_file(path);
  DomainSpec d;
  try {
    if (j.value("format", std::string{}) != "trajmark-domain")
      throw Error(ErrorCode::SchemaViolation, path + ": not a domain file");
    d.name = j.at("name").get<std::string>();
    d.delta = j.value("delta", 2.0);
    if (j.contains("sizes")) {
      const auto& s = j.at("sizes");
      d.sizes.calibration = s.value("calibration", d.sizes.calibration);
      d.sizes.finetune = s.value("finetune", d.sizes.finetune);
      d.sizes.verification = s.value("verification", d.sizes.verification);
    }
    d.fallback_pool_size = j.value("fallback_pool_size", d.fallback_pool_size);
    d.tools = library_from_json(j.at("tools"));
    for (const auto& [id, w] : j.at("natural").items()) d.natural.emplace(id, Distribution(w.get<std::vector<double>>()));
    const json pools = j.value("value_pools", json::object());
    for (const auto& [name, arr] : pools.items()) {
      std::vector<Value> values;
      for (const auto& v : arr) values.push_back(value_from_json(v));
      d.value_pools.emplace(name, std::move(values));
    }
    for (const auto& jt : j.at("templates")) {
      QueryTemplate t;
      t.id = jt.at("id").get<std::string>();
      t.weight = jt.value("weight", 1.0);
      for (const auto& js : jt.at("steps")) {
        TemplateStep s;
        if (js.contains("set")) {
          s.set_id = js.at("set").get<std::string>();
        } else {
          s.tool = js.at("tool").get<std::string>();
          for (const auto& ja : js.value("args", json::array()))
            s.args.push_back({ja.at("name").get<std::string>(), ja.at("pool").get<std::string>()});
        }
        t.steps.push_back(std::move(s));
      }
      d.templates.push_back(std::move(t));
    }
    const auto manifest_path = fs::path(path).parent_path() / j.at("manifest").get<std::string>();
    d.manifest = load_manifest(manifest_path.string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, path + ": " + e.what());
  }
  check_domain(d);
  return d;
}

std::string save_domain(const std::string& dir, const DomainSpec& d) {
  fs::create_directories(dir);
  const std::string manifest_file = d.name + ".manifest.json";
  write_json_file(fs::path(dir) / manifest_file, to_json(d.manifest));
  const auto domain_path = fs::path(dir) / (d.name + ".domain.json");
  write_json_file(domain_path, to_json(d, manifest_file));
  return domain_path.string();
}

SandboxSpec sandbox_for(const DomainSpec& d) {
  SandboxSpec s;
  s.tools = d.tools;
  return s;
}

}  // namespace trajmark
