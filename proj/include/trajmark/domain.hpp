#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trajmark/distribution.hpp"
#include "trajmark/equivalence.hpp"
#include "trajmark/sandbox.hpp"

namespace trajmark {

struct FillerArg {
  std::string name;
  std::string pool;  // value pool the argument is drawn from
};

/// One position of a query skeleton: a fixed tool call, or an equivalence slot
/// filled with a member of the referenced set.
struct TemplateStep {
  std::string tool;
  std::vector<FillerArg> args;
  std::string set_id;

  bool is_slot() const { return !set_id.empty(); }
};

struct QueryTemplate {
  std::string id;
  double weight = 1.0;
  std::vector<TemplateStep> steps;
};

struct CorpusSizes {
  std::size_t calibration = 20000;
  std::size_t finetune = 24000;
  std::size_t verification = 9000;
};

/// Synthetic agent domain: tool library, candidate equivalence sets, query
/// skeletons and the victim's natural member frequencies.
struct DomainSpec {
  std::string name;
  ToolLibrary tools;
  Manifest manifest;
  std::map<std::string, Distribution> natural;  // by set id
  std::vector<QueryTemplate> templates;
  std::map<std::string, std::vector<Value>> value_pools;
  std::size_t fallback_pool_size = 40;
  CorpusSizes sizes;
  double delta = 2.0;

  const EquivalenceSet* set(std::string_view id) const;
  /// Ids of every set referenced by a template slot, in first-use order.
  std::vector<std::string> slot_set_ids() const;
};

/// Cross-reference checks: tools exist, slot sets exist with a matching natural distribution.
void check_domain(const DomainSpec& d);

/// Domain JSON without the candidate sets; `manifest_file` is recorded as the relative manifest path.
nlohmann::ordered_json to_json(const DomainSpec& d, const std::string& manifest_file);
/// Loads the domain file and the manifest it references (relative to the domain file).
DomainSpec load_domain(const std::string& path);
/// Writes <dir>/<name>.domain.json and <dir>/<name>.manifest.json; returns the domain path.
std::string save_domain(const std::string& dir, const DomainSpec& d);

SandboxSpec sandbox_for(const DomainSpec& d);

/// Built-in synthetic domains with valid candidate counts per scheme
/// (VR/PGR/IA/AE/CE) of data 8/7/11/7/6, business 12/4/5/5/2 and social
/// 18/2/6/3/5. Each manifest also carries a few deliberately broken
/// candidates that validation must reject.
DomainSpec builtin_domain(std::string_view name);
const std::vector<std::string>& builtin_domain_names();
bool is_builtin_name(std::string_view name);

struct SchemeCounts {
  std::size_t vr, pgr, ia, ae, ce;
  std::size_t total() const { return vr + pgr + ia + ae + ce; }
};
SchemeCounts builtin_scheme_counts(std::string_view name);

}  // namespace trajmark
