#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "trajmark/error.hpp"
#include "trajmark/verifier.hpp"

using namespace trajmark;
using testing::act;

namespace {

Action call(const std::string& tool, std::int64_t x) { return act(tool, {{"x", Value{x}}}); }

PassPool alias_pool(std::size_t n, double delta) {
  PassPool pool;
  pool.domain = "toy";
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = std::to_string(i);
    pool.passes.push_back(testing::make_pass(static_cast<int>(i + 1), testing::alias_set("s" + k, "A" + k + ".Op", "B" + k + ".Op"),
                                             {0.6, 0.4}, 1, delta));
  }
  return pool;
}

/// One trajectory per draw, each with one occurrence of every pass's set.
Corpus sample_corpus(const PassPool& pool, const std::vector<Distribution>& dists, std::size_t n, std::uint64_t seed) {
  Engine rng(seed);
  Corpus c;
  for (std::size_t q = 0; q < n; ++q) {
    GreyBoxTrajectory t{"q" + std::to_string(q), {}, {}, "r"};
    for (std::size_t p = 0; p < pool.size(); ++p) {
      const auto m = sample_index(rng, dists[p].weights());
      t.actions.push_back(call(pool.passes[p].eqset.members[m].patterns[0].tool, static_cast<std::int64_t>(q)));
    }
    c.push_back(std::move(t));
  }
  return c;
}

UserRecord user(const std::string& hex, std::size_t n, std::int64_t created) {
  UserRecord u;
  u.uid = uid_from_hex(hex, n);
  u.uid_hex = hex;
  u.active_pass_ids = pass_ids_from_uid(u.uid);
  u.created_at = created;
  return u;
}

}  // namespace

TEST_CASE("empirical distribution") {
  const auto pool = alias_pool(1, 2.0);
  const auto& pass = pool.passes[0];
  Corpus only_target{{"q", {}, {call("B0.Op", 1), call("B0.Op", 2), call("Z.Op", 3)}, "r"}};
  auto e = empirical_distribution(only_target, pass);
  CHECK(e.count == 2);
  REQUIRE(e.distribution);
  CHECK(*e.distribution == Distribution{0.0, 1.0});

  Corpus none{{"q", {}, {call("Z.Op", 1)}, "r"}};
  e = empirical_distribution(none, pass);
  CHECK(e.count == 0);
  CHECK_FALSE(e.distribution);
  const auto r = detect_pass(e, pass, 0.015, 30);
  CHECK_FALSE(r.conclusive);
  CHECK_FALSE(r.detected);
}

TEST_CASE("detection rule") {
  const auto pass = testing::make_pass(1, testing::alias_set("s", "A.Op", "B.Op"), {0.7, 0.3}, 1, 3.0);
  CHECK(detect_pass(Empirical{pass.biased, 100}, pass, 0.015, 30).detected);
  const auto thin = detect_pass(Empirical{pass.biased, 29}, pass, 0.015, 30);
  CHECK_FALSE(thin.conclusive);
  CHECK_FALSE(thin.detected);

  // A clean suspect reproduces the natural distribution.
  const double gap = testing::jsd_oracle(pass.natural.weights(), pass.biased.weights());
  CHECK(gap > 0.015);
  const auto clean = detect_pass(Empirical{pass.natural, 1000}, pass, 0.015, 30);
  CHECK(clean.conclusive);
  CHECK_FALSE(clean.detected);
  REQUIRE(clean.jsd_to_target);
  CHECK(*clean.jsd_to_target == doctest::Approx(gap).epsilon(1e-12));
}

TEST_CASE("sampling from the target passes at tight thresholds") {
  const auto pass = testing::make_pass(1, testing::alias_set("s", "A.Op", "B.Op"), {0.5, 0.5}, 0, std::log(9.0));
  REQUIRE(pass.biased[0] == doctest::Approx(0.9));
  PassPool pool;
  pool.passes.push_back(pass);
  int below = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto c = sample_corpus(pool, {pass.biased}, 1000, seed);
    const auto e = empirical_distribution(c, pass);
    CHECK(e.count == 1000);
    below += js_divergence(*e.distribution, pass.biased) < 0.005;
  }
  CHECK(below >= 198);
}

TEST_CASE("classification thresholds") {
  std::vector<DetectionResult> results(5);
  for (int i = 0; i < 5; ++i) results[i].pass_id = i + 1;
  auto v = classify_model(results, 3);
  CHECK(v.n_det == 0);
  CHECK_FALSE(v.classified_as_imitation);

  for (int i : {0, 2, 4}) results[i].conclusive = results[i].detected = true;
  v = classify_model(results, 3);
  CHECK(v.n_det == 3);
  CHECK(v.detected_vector.count() == 3);
  CHECK(v.detected_vector[2]);
  CHECK(v.classified_as_imitation);
  CHECK_FALSE(classify_model(results, 4).classified_as_imitation);
}

TEST_CASE("suspect verification over the pool and threshold monotonicity") {
  const auto pool = alias_pool(8, 2.0);
  std::vector<Distribution> dists;
  for (std::size_t i = 0; i < pool.size(); ++i) dists.push_back(i % 2 ? pool.passes[i].biased : pool.passes[i].natural);
  const auto suspect = sample_corpus(pool, dists, 3000, 4);
  const auto v = verify_suspect(suspect, pool, Thresholds{});
  CHECK(v.results.size() == 8);
  CHECK(v.n_det == 4);
  for (std::size_t i = 0; i < 8; ++i) CHECK(v.detected_vector[i] == (i % 2 == 1));
  CHECK(v.classified_as_imitation);

  const auto profile = profile_suspect(suspect, pool);
  std::size_t prev = 0;
  for (double tj : {0.001, 0.005, 0.01, 0.015, 0.05, 0.1, 0.5}) {
    const auto n = count_detections(profile, tj, 30);
    CHECK(n >= prev);
    prev = n;
  }
  CHECK(count_detections(profile, 0.015, 30) == v.n_det);
}

TEST_CASE("cosine similarity against a dot-product oracle") {
  std::mt19937_64 g(2);
  for (int i = 0; i < 500; ++i) {
    Uid a(39), b(39);
    double dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < 39; ++k) {
      a[k] = g() % 3 == 0;
      b[k] = g() % 3 == 0;
      dot += a[k] && b[k];
      na += a[k];
      nb += b[k];
    }
    const double expect = na && nb ? dot / (std::sqrt(na) * std::sqrt(nb)) : 0.0;
    const double got = cosine_similarity(a, b);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0 + 1e-12);
  }
}

TEST_CASE("localization ranking") {
  Registry reg("toy", 8, 5, 8);
  reg.append(user("1f", 8, 30));  // passes 1-5
  reg.append(user("f8", 8, 20));  // passes 4-8
  reg.append(user("3e", 8, 10));  // passes 2-6

  auto ranked = localize_user(uid_from_hex("1f", 8), reg);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].uid_hex == "1f");
  CHECK(ranked[0].similarity == doctest::Approx(1.0));

  // Orthogonal to 1f.
  ranked = localize_user(uid_from_hex("e0", 8), reg);
  CHECK(ranked.back().uid_hex == "1f");
  CHECK(ranked.back().similarity == 0.0);

  // 1e (passes 2-5) is equally close to 1f and 3e; the earlier registration wins.
  ranked = localize_user(uid_from_hex("1e", 8), reg);
  CHECK(ranked[0].similarity == ranked[1].similarity);
  CHECK(ranked[0].uid_hex == "3e");

  CHECK_THROWS_AS(localize_user(Uid(8), Registry("toy", 8, 5, 8)), Error);
  CHECK_THROWS_AS(localize_user(Uid(9), reg), Error);
}

TEST_CASE("exact vectors always localize to their owner") {
  Registry reg("toy", 39);
  Engine rng(12);
  for (int i = 0; i < 2000; ++i) register_user(reg, rng, i);
  for (std::size_t i = 0; i < reg.users.size(); i += 97) {
    const auto ranked = localize_user(reg.users[i].uid, reg);
    CHECK(ranked[0].uid_hex == reg.users[i].uid_hex);
  }
}

TEST_CASE("f1 grid conventions") {
  const auto pool = alias_pool(6, 2.0);
  std::vector<Distribution> biased, natural;
  for (const auto& p : pool.passes) {
    biased.push_back(p.biased);
    natural.push_back(p.natural);
  }
  std::vector<SuspectProfile> pos, neg;
  for (std::uint64_t s = 0; s < 4; ++s) {
    pos.push_back(profile_suspect(sample_corpus(pool, biased, 2000, s), pool));
    neg.push_back(profile_suspect(sample_corpus(pool, natural, 2000, 100 + s), pool));
  }
  const auto grid = f1_grid(pos, neg, kDefaultThetaJGrid, kDefaultThetaNGrid, 30);
  CHECK(grid.size() == 25);
  for (const auto& c : grid) {
    CHECK(c.tp + c.fn == 4);
    CHECK(c.fp + c.tn == 4);
    if (c.tp + c.fp == 0) CHECK(c.precision == 0.0);
    if (c.precision + c.recall == 0) {
      CHECK(c.f1 == 0.0);
    } else {
      CHECK(c.f1 == doctest::Approx(2 * c.precision * c.recall / (c.precision + c.recall)));
    }
  }
  // Imitation verdicts shrink as theta_N grows.
  for (const auto& c : grid)
    for (const auto& d : grid)
      if (c.theta_j == d.theta_j && d.theta_n == c.theta_n + 1) CHECK(d.tp + d.fp <= c.tp + c.fp);
}

TEST_CASE("verdict report round trip") {
  const auto pool = alias_pool(4, 2.0);
  std::vector<Distribution> biased;
  for (const auto& p : pool.passes) biased.push_back(p.biased);
  const Thresholds th{0.015, 2, 30};
  const auto v = verify_suspect(sample_corpus(pool, biased, 500, 3), pool, th);
  const auto back = verdict_from_json(to_json(v, th));
  CHECK(back.detected_vector == v.detected_vector);
  CHECK(back.n_det == v.n_det);
  CHECK(back.classified_as_imitation == v.classified_as_imitation);
}
