#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "trajmark/distribution.hpp"
#include "trajmark/rng.hpp"
#include "trajmark/sandbox.hpp"
#include "trajmark/trajectory.hpp"

namespace trajmark {

enum class Scheme { VR, PGR, IA, AE, CE };

inline constexpr Scheme kAllSchemes[] = {Scheme::VR, Scheme::PGR, Scheme::IA, Scheme::AE, Scheme::CE};

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

/// One argument of an action pattern: either bound to a named slot or pinned to a literal.
struct PatternArg {
  std::string name;
  std::variant<std::string, Value> binding;  // slot name | fixed literal

  bool is_slot() const { return binding.index() == 0; }
  const std::string& slot() const { return std::get<0>(binding); }
  const Value& fixed() const { return std::get<1>(binding); }
  bool operator==(const PatternArg&) const = default;
};

/// Matches one action: same tool, exactly the listed argument names, fixed
/// arguments equal, slot arguments bound.
struct ActionPattern {
  std::string tool;
  std::vector<PatternArg> args;

  bool operator==(const ActionPattern&) const = default;
};

/// Contiguous run of action patterns. A slot name used by several patterns must
/// bind the same value in all of them.
struct Segment {
  std::vector<ActionPattern> patterns;

  std::size_t size() const { return patterns.size(); }
  bool operator==(const Segment&) const = default;
};

using Bindings = std::map<std::string, Value, std::less<>>;

struct SlotRef {
  std::size_t action = 0;  // index within the source segment
  std::string slot;
  bool operator==(const SlotRef&) const = default;
};

using ArgSource = std::variant<SlotRef, Value>;

/// How to fill the slot arguments of a target member from a source member's
/// bindings: per target action, per target argument name.
struct ParamMapping {
  std::vector<std::map<std::string, ArgSource>> actions;
  bool operator==(const ParamMapping&) const = default;
};

struct EquivalenceSet {
  std::string id;
  Scheme scheme = Scheme::VR;
  std::vector<Segment> members;
  std::map<std::pair<std::size_t, std::size_t>, ParamMapping> mappings;  // (from, to)

  std::size_t arity() const { return members.size(); }
  const ParamMapping& mapping(std::size_t from, std::size_t to) const;
  bool operator==(const EquivalenceSet&) const = default;
};

/// Structural checks: k >= 2, non-empty members, valid tool and slot names,
/// a mapping for every ordered member pair whose references resolve.
/// Throws ManifestError.
void check_equivalence_set(const EquivalenceSet& set);

/// Tries to match `member` against the front of `actions`.
std::optional<Bindings> match_segment(const Segment& member, std::span<const Action> actions);

/// Builds concrete actions for a member from slot bindings; throws MappingGap on unbound slots.
std::vector<Action> instantiate(const Segment& member, const Bindings& bindings);

/// Rewrites member `from` (with its bindings) into member `to` via the declared
/// mapping; the result is guaranteed to match `to`. Throws MappingGap.
std::vector<Action> rewrite_member(const EquivalenceSet& set, std::size_t from, std::size_t to,
                                   const Bindings& bindings);

struct WatermarkPass {
  int pass_id = 0;
  EquivalenceSet eqset;
  Distribution natural;
  std::size_t target_index = 0;
  double delta = 0.0;
  Distribution biased;
  int order_rank = 0;
};

struct PassPool {
  std::string domain;
  ToolLibrary tools;  // every tool referenced by a pass, for sandbox spot checks
  std::vector<WatermarkPass> passes;  // sorted by pass_id

  std::size_t size() const { return passes.size(); }
  const WatermarkPass& by_id(int pass_id) const;
};

inline constexpr int kPoolFormatVersion = 1;

nlohmann::ordered_json to_json(const EquivalenceSet& set);
EquivalenceSet eqset_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const PassPool& pool);
/// Checks pass ids are 1..N, order ranks unique, and each biased
/// distribution equals the derived one exactly.
PassPool pool_from_json(const nlohmann::ordered_json& j);
PassPool load_pool(const std::string& path);
void save_pool(const std::string& path, const PassPool& pool);

/// Candidate sets as declared by a manifest.
struct Manifest {
  std::string domain;
  std::vector<EquivalenceSet> candidates;
};

nlohmann::ordered_json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::ordered_json& j);
Manifest load_manifest(const std::string& path);

/// Per-occurrence member counts using the injector's scan semantics.
struct MemberCounts {
  std::vector<double> counts;
  std::size_t total = 0;
};

MemberCounts count_members(const Corpus& corpus, const EquivalenceSet& set);

/// Throws NoObservations if the set never occurs.
std::pair<Distribution, std::size_t> estimate_natural_distribution(const Corpus& corpus, const EquivalenceSet& set);

/// Sandbox used for execution-based equivalence checks.
struct SandboxSpec {
  ToolLibrary tools;
  // Values drawn for slots during validation; a small shared alphabet makes
  // aliasing cases (src == dst) likely.
  std::vector<Value> slot_alphabet{std::string("a"), std::string("b"), std::string("c")};
  std::vector<std::string> content_alphabet{"x", "y", "z"};
  double key_presence = 0.75;
};

struct Counterexample {
  std::size_t case_index = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<Action> source_actions;
  std::vector<Action> target_actions;
  SandboxState environment;
  std::string detail;
};

struct ValidationReport {
  std::string set_id;
  bool valid = false;
  std::size_t cases_run = 0;
  std::optional<Counterexample> counterexample;
};

/// Random environment covering every key either segment reads (dry run on an empty state first).
SandboxState generate_environment(const ToolLibrary& lib, std::span<const Action> a, std::span<const Action> b,
                                  const SandboxSpec& spec, Engine& rng);

/// Compares two concrete segments from the same environment.
bool equivalent_on(const ToolLibrary& lib, std::span<const Action> a, std::span<const Action> b,
                   const SandboxState& env, bool erase_ancillary, std::string* detail = nullptr);

/// For every case and every ordered member pair, executes the source member and
/// its rewrite from identical environments and compares outputs and canonical
/// side effects (ancillary entries erased for AE sets). Throws UnknownTool / ExecutionFailure.
ValidationReport validate_equivalence(const EquivalenceSet& set, const SandboxSpec& sandbox, std::size_t n_cases,
                                      std::uint64_t rng_seed);

}  // namespace trajmark
