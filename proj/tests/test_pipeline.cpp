// Library-level closed loop on the data domain: register, watermark, imitate,
// verify, localize.

#include "doctest.h"
#include "trajmark/bench.hpp"
#include "trajmark/registry.hpp"
#include "trajmark/verifier.hpp"

using namespace trajmark;

namespace {

struct World {
  PreparedDomain prepared;
  Registry registry;
};

const World& world() {
  static const World w = [] {
    World x{prepare_domain("data", 77), {}};
    x.registry = Registry("data", x.prepared.pool.size());
    Engine rng(78);
    for (int i = 0; i < 200; ++i) register_user(x.registry, rng, i);
    return x;
  }();
  return w;
}

}  // namespace

TEST_CASE("an imitation model is caught and traced to its user") {
  const auto& w = world();
  for (std::size_t k : {3u, 120u}) {
    const auto& user = w.registry.users[k];
    CAPTURE(user.uid_hex);
    const auto suspect = imitation_suspect(w.prepared, user.uid, 1.0, 8000, 4000, 500 + k, "attacker");
    const auto v = verify_suspect(suspect, w.prepared.pool, Thresholds{});
    CHECK(v.classified_as_imitation);
    // Every detection comes from a pass the user actually received.
    for (std::size_t i = 0; i < v.detected_vector.size(); ++i)
      if (v.detected_vector[i]) CHECK(user.uid[i]);
    const auto ranked = localize_user(v.detected_vector, w.registry);
    CHECK(ranked.front().uid_hex == user.uid_hex);
  }
}

TEST_CASE("a model trained on clean data is not flagged") {
  const auto& w = world();
  for (std::uint64_t seed : {900u, 901u}) {
    const auto suspect = benign_suspect(w.prepared, 8000, 4000, seed, "benign");
    const auto v = verify_suspect(suspect, w.prepared.pool, Thresholds{});
    CHECK_FALSE(v.classified_as_imitation);
  }
}

TEST_CASE("a surrogate that ignores its harvest is not flagged") {
  const auto& w = world();
  const auto suspect = imitation_suspect(w.prepared, w.registry.users[7].uid, 0.0, 8000, 4000, 31, "eta0");
  CHECK_FALSE(verify_suspect(suspect, w.prepared.pool, Thresholds{}).classified_as_imitation);
}
