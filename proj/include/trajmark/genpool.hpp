#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajmark/domain.hpp"
#include "trajmark/equivalence.hpp"

namespace trajmark {

struct GenpoolOptions {
  std::uint64_t seed = 0;
  std::optional<double> delta;        // defaults to the domain's delta
  std::size_t validation_cases = 100;
  std::optional<std::size_t> calibration_size;  // defaults to the domain's calibration size
  std::optional<std::vector<EquivalenceSet>> candidates;  // defaults to the domain's manifest
};

struct CandidateOutcome {
  std::string id;
  Scheme scheme = Scheme::VR;
  bool accepted = false;
  std::string reason;  // empty when accepted
  std::optional<Counterexample> counterexample;
  std::size_t observations = 0;
};

struct GenpoolResult {
  PassPool pool;
  std::vector<CandidateOutcome> candidates;

  std::map<Scheme, std::size_t> per_scheme() const;
};

/// Validates every candidate in the sandbox, estimates natural distributions
/// from a calibration corpus, and builds passes with pass_id = order_rank =
/// position among the accepted candidates. Target members are drawn from
/// the seed. Throws NoValidCandidates when nothing survives.
GenpoolResult generate_pool(const DomainSpec& domain, const GenpoolOptions& opts);

/// Table-style per-scheme summary (one line per scheme plus a total).
std::string format_scheme_summary(const GenpoolResult& r);

}  // namespace trajmark
