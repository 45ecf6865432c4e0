#include "trajmark/genpool.hpp"

#include <sstream>

#include "trajmark/error.hpp"
#include "trajmark/rng.hpp"
#include "trajmark/simkit.hpp"

namespace trajmark {

std::map<Scheme, std::size_t> GenpoolResult::per_scheme() const {
  std::map<Scheme, std::size_t> m;
  for (auto s : kAllSchemes) m[s] = 0;
  for (const auto& p : pool.passes) ++m[p.eqset.scheme];
  return m;
}

GenpoolResult generate_pool(const DomainSpec& domain, const GenpoolOptions& opts) {
  const double delta = opts.delta.value_or(domain.delta);
  const auto sandbox = sandbox_for(domain);
  const auto calibration = generate_grey_corpus(domain, opts.calibration_size.value_or(domain.sizes.calibration),
                                                derive_seed(opts.seed, {"genpool", "calibration"}), "calibration");
  GenpoolResult r;
  r.pool.domain = domain.name;
  for (const auto& set : opts.candidates ? *opts.candidates : domain.manifest.candidates) {
    CandidateOutcome c{set.id, set.scheme, false, {}, std::nullopt, 0};
    try {
      check_equivalence_set(set);
      auto report = validate_equivalence(set, sandbox, opts.validation_cases, derive_seed(opts.seed, {"validate", set.id}));
      if (!report.valid) {
        c.reason = "not equivalent";
        c.counterexample = std::move(report.counterexample);
        r.candidates.push_back(std::move(c));
        continue;
      }
    } catch (const Error& e) {
      c.reason = e.what();
      r.candidates.push_back(std::move(c));
      continue;
    }
    const auto counts = count_members(calibration, set);
    c.observations = counts.total;
    if (counts.total == 0) {
      c.reason = "never observed in the calibration corpus";
      r.candidates.push_back(std::move(c));
      continue;
    }
    WatermarkPass p;
    p.pass_id = static_cast<int>(r.pool.passes.size()) + 1;
    p.order_rank = p.pass_id;
    p.eqset = set;
    p.natural = Distribution::from_counts(counts.counts);
    Engine rng(derive_seed(opts.seed, {"target", set.id}));
    p.target_index = static_cast<std::size_t>(uniform_int(rng, 0, set.arity() - 1));
    p.delta = delta;
    p.biased = derive_target_distribution(p.natural, p.target_index, delta);
    for (const auto& m : set.members)
      for (const auto& pat : m.patterns)
        if (const auto* t = domain.tools.find(pat.tool)) r.pool.tools.add(*t);
    r.pool.passes.push_back(std::move(p));
    c.accepted = true;
    r.candidates.push_back(std::move(c));
  }
  if (r.pool.passes.empty()) throw Error(ErrorCode::NoValidCandidates, "no candidate of domain " + domain.name + " survived validation");
  return r;
}

std::string format_scheme_summary(const GenpoolResult& r) {
  std::ostringstream out;
  std::size_t total = 0;
  for (const auto& [scheme, n] : r.per_scheme()) {
    out << to_string(scheme) << '\t' << n << '\n';
    total += n;
  }
  out << "Total\t" << total << '\n';
  return out.str();
}

}  // namespace trajmark
