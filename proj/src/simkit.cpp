#include "trajmark/simkit.hpp"

#include "trajmark/equivalence.hpp"
#include "trajmark/error.hpp"
#include "trajmark/injector.hpp"
#include "trajmark/rng.hpp"

namespace trajmark {

namespace {

Value draw_value(const DomainSpec& d, const std::string& pool, Engine& rng) {
  auto it = d.value_pools.find(pool);
  if (it != d.value_pools.end() && !it->second.empty())
    return it->second[uniform_int(rng, 0, it->second.size() - 1)];
  return pool + "_" + std::to_string(uniform_int(rng, 1, d.fallback_pool_size));
}

// One query: template choice, filler arguments and member choices all come
// from the per-query stream, so victim and surrogate differ only in member draws.
template <class MemberDist>
std::vector<Action> generate_actions(const DomainSpec& d, const std::vector<double>& template_weights, Engine& rng,
                                     std::size_t& template_index, MemberDist&& dist_for) {
  template_index = sample_index(rng, template_weights);
  const auto& tmpl = d.templates[template_index];
  std::vector<Action> actions;
  actions.reserve(tmpl.steps.size() + 4);
  for (const auto& step : tmpl.steps) {
    if (!step.is_slot()) {
      Action a{step.tool, {}};
      for (const auto& arg : step.args) a.args.emplace_back(arg.name, draw_value(d, arg.pool, rng));
      actions.push_back(std::move(a));
      continue;
    }
    const auto* set = d.set(step.set_id);
    if (!set) throw Error(ErrorCode::SchemaViolation, "domain " + d.name + " has no set " + step.set_id);
    const Distribution& dist = dist_for(step.set_id);
    const auto member = sample_index(rng, dist.weights());
    Bindings b;
    for (const auto& p : set->members[member].patterns)
      for (const auto& arg : p.args)
        if (arg.is_slot() && !b.count(arg.slot())) b.emplace(arg.slot(), draw_value(d, arg.slot(), rng));
    for (auto& a : instantiate(set->members[member], b)) actions.push_back(std::move(a));
  }
  return actions;
}

std::vector<double> template_weights(const DomainSpec& d) {
  std::vector<double> w;
  for (const auto& t : d.templates) w.push_back(t.weight);
  return w;
}

std::string query_id(std::string_view stage, std::size_t i) { return std::string(stage) + "-" + std::to_string(i); }

}  // namespace

std::vector<FullTrajectory> generate_victim_corpus(const DomainSpec& d, std::size_t n, std::uint64_t seed,
                                                   std::string_view stage) {
  const auto weights = template_weights(d);
  const SeedTree root = SeedTree(seed).child(stage);
  std::vector<FullTrajectory> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Engine rng = root.child(i).engine();
    std::size_t ti = 0;
    auto actions = generate_actions(d, weights, rng, ti, [&](const std::string& id) -> const Distribution& {
      return d.natural.at(id);
    });
    FullTrajectory t;
    t.query_id = query_id(stage, i);
    for (std::size_t k = 0; k < actions.size(); ++k) {
      const auto tag = std::string(kPrivateMarker) + t.query_id + ":" + std::to_string(k) + "]]";
      Step s;
      s.thought = tag + " next I should call " + actions[k].tool;
      s.observation = tag + " " + actions[k].tool + " finished";
      s.action = std::move(actions[k]);
      t.steps.push_back(std::move(s));
    }
    t.response = "Done: " + d.templates[ti].id + " for request " + t.query_id + ".";
    out.push_back(std::move(t));
  }
  return out;
}

Corpus generate_grey_corpus(const DomainSpec& d, std::size_t n, std::uint64_t seed, std::string_view stage) {
  Corpus c;
  c.reserve(n);
  for (const auto& t : generate_victim_corpus(d, n, seed, stage)) c.push_back(grey_box_view(t));
  return c;
}

SurrogateModel fit_surrogate(const Corpus& harvested, const DomainSpec& d, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidRange, "eta must lie in [0, 1]");
  SurrogateModel m;
  m.domain = d.name;
  m.eta = eta;
  m.harvest_size = harvested.size();
  for (const auto& id : d.slot_set_ids()) {
    const auto& natural = d.natural.at(id);
    const auto* set = d.set(id);
    if (!set) throw Error(ErrorCode::SchemaViolation, "domain " + d.name + " has no set " + id);
    const auto counts = count_members(harvested, *set);
    if (counts.total == 0) {
      m.fitted.emplace(id, natural);
      m.fallback_sets.push_back(id);
      continue;
    }
    m.fitted.emplace(id, mix(Distribution::from_counts(counts.counts), natural, eta));
  }
  return m;
}

Corpus sample_surrogate(const SurrogateModel& m, const DomainSpec& d, std::size_t n, std::uint64_t seed,
                        std::string_view stage) {
  if (m.domain != d.name) throw Error(ErrorCode::CorpusMismatch, "surrogate fitted for domain " + m.domain);
  const auto weights = template_weights(d);
  const SeedTree root = SeedTree(seed).child(stage);
  Corpus out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Engine rng = root.child(i).engine();
    std::size_t ti = 0;
    GreyBoxTrajectory t;
    t.query_id = query_id(stage, i);
    t.actions = generate_actions(d, weights, rng, ti, [&](const std::string& id) -> const Distribution& {
      return m.fitted.at(id);
    });
    t.response = "Done: " + d.templates[ti].id + " for request " + t.query_id + ".";
    out.push_back(std::move(t));
  }
  return out;
}

nlohmann::ordered_json to_json(const SurrogateModel& m) {
  nlohmann::ordered_json fitted = nlohmann::ordered_json::object();
  for (const auto& [id, dist] : m.fitted) fitted[id] = dist.weights();
  return {{"domain", m.domain},
          {"eta", m.eta},
          {"harvest_size", m.harvest_size},
          {"fallback_sets", m.fallback_sets},
          {"fitted", std::move(fitted)}};
}

}  // namespace trajmark
