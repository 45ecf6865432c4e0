#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "trajmark/error.hpp"
#include "trajmark/injector.hpp"

using namespace trajmark;
using testing::act;
using testing::str;

namespace {

ErrorCode error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("boost examples") {
  const auto same = derive_target_distribution({0.5, 0.5}, 0, 0.0);
  CHECK(same.weights() == std::vector<double>{0.5, 0.5});

  const auto third = derive_target_distribution({0.5, 0.5}, 0, std::log(3.0));
  CHECK(third[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(third[1] == doctest::Approx(0.25).epsilon(1e-12));

  const auto d = derive_target_distribution({0.2, 0.8}, 0, 2.0);
  const auto d_oracle = testing::eq1_oracle({0.2, 0.8}, 0, 2.0);
  CHECK(d[0] == doctest::Approx(d_oracle[0]).epsilon(1e-14));
  CHECK(d[1] == doctest::Approx(d_oracle[1]).epsilon(1e-14));
  // Frozen: 0.2 e^2 / (0.2 e^2 + 0.8) = 0.648786..., quoted as 0.64877 / 0.35123.
  CHECK(std::abs(d[0] - 0.64877) < 1e-4);
  CHECK(std::abs(d[1] - 0.35123) < 1e-4);

  CHECK(error_code([] { derive_target_distribution({0.5, 0.5}, 2, 1.0); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_code([] { derive_target_distribution({0.5, 0.5}, 0, -1.0); }) == ErrorCode::InvalidDistribution);
  CHECK(error_code([] { Distribution({0.5, 0.6}); }) == ErrorCode::InvalidDistribution);
  CHECK(error_code([] { Distribution({1.5, -0.5}); }) == ErrorCode::InvalidDistribution);
}

TEST_CASE("boost properties on fuzzed inputs") {
  std::mt19937_64 g(1234);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 2 + g() % 4;
    const auto w = testing::random_simplex(g, k);
    const Distribution nat(w);
    const std::size_t t = g() % k;
    const double delta = static_cast<double>(g() % 5000) / 1000.0;
    const auto out = derive_target_distribution(nat, t, delta);

    double sum = 0;
    for (double x : out.weights()) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    const auto oracle = testing::eq1_oracle(w, t, delta);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(out[i] - oracle[i]) <= 1e-12);

    // Non-target masses are rescaled by one common factor.
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        if (a != t && b != t && a != b && w[b] > 1e-3 && w[a] > 1e-3)
          CHECK(out[a] / out[b] == doctest::Approx(w[a] / w[b]).epsilon(1e-12));

    // Monotone in delta when the target is neither absent nor certain.
    if (w[t] > 1e-9 && w[t] < 1 - 1e-9) {
      const auto more = derive_target_distribution(nat, t, delta + 0.5);
      CHECK(more[t] > out[t]);
      for (std::size_t j = 0; j < k; ++j)
        if (j != t && w[j] > 0) CHECK(more[j] < out[j]);
      CHECK(derive_target_distribution(nat, t, 50.0)[t] >= 1 - 1e-6);
    }
  }
}

TEST_CASE("divergences") {
  const Distribution p{0.75, 0.25}, q{0.5, 0.5};
  CHECK(kl_divergence(p, q) == doctest::Approx(0.13081).epsilon(1e-4));
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK(js_divergence(p, p) == 0.0);
  CHECK(js_divergence(Distribution{1.0, 0.0}, Distribution{0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(error_code([] { js_divergence({0.5, 0.5}, {0.2, 0.3, 0.5}); }) == ErrorCode::ArityMismatch);
  CHECK(error_code([] { kl_divergence({0.5, 0.5}, {1.0, 0.0}); }) == ErrorCode::SupportMismatch);

  std::mt19937_64 g(99);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + g() % 3;
    const auto a = testing::random_simplex(g, k), b = testing::random_simplex(g, k);
    const double ab = js_divergence(Distribution(a), Distribution(b));
    CHECK(ab == js_divergence(Distribution(b), Distribution(a)));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab == doctest::Approx(testing::jsd_oracle(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("divergence from natural grows with boost strength") {
  for (const auto& w : std::vector<std::vector<double>>{{0.5, 0.5}, {0.8, 0.2}, {0.3, 0.7}, {0.5, 0.3, 0.2}}) {
    const Distribution nat(w);
    for (std::size_t t = 0; t < w.size(); ++t) {
      double prev = -1;
      for (double delta : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}) {
        const auto b = derive_target_distribution(nat, t, delta);
        const double k = kl_divergence(b, nat);
        CHECK(k == doctest::Approx(testing::kld_oracle(b.weights(), w)).epsilon(1e-12));
        if (delta == 0.0) CHECK(k == 0.0);
        CHECK(k > prev);
        prev = k;
      }
    }
  }
}

TEST_CASE("mix and counts") {
  const auto m = mix(Distribution{0.9, 0.1}, Distribution{0.5, 0.5}, 0.5);
  CHECK(m[0] == doctest::Approx(0.7));
  CHECK(m[1] == doctest::Approx(0.3));
  const std::vector<double> counts{3, 1};
  CHECK(Distribution::from_counts(counts) == Distribution{0.75, 0.25});
  const std::vector<double> none{0, 0};
  CHECK(error_code([&] { Distribution::from_counts(none); }) == ErrorCode::NoObservations);
}

TEST_CASE("segment matching binds shared slots consistently") {
  const auto set = testing::move_set();
  const std::vector<Action> good{act("Fs.CopyFile", {{"src", str("a")}, {"dst", str("b")}}),
                                 act("Fs.DeleteFile", {{"path", str("a")}})};
  auto b = match_segment(set.members[1], good);
  REQUIRE(b);
  CHECK(b->at("src") == str("a"));
  CHECK(b->at("dst") == str("b"));

  const std::vector<Action> mismatched{act("Fs.CopyFile", {{"src", str("a")}, {"dst", str("b")}}),
                                       act("Fs.DeleteFile", {{"path", str("b")}})};
  CHECK_FALSE(match_segment(set.members[1], mismatched));

  // Argument names must be exactly the pattern's.
  const std::vector<Action> extra{act("Fs.MoveFile", {{"src", str("a")}, {"dst", str("b")}, {"force", Value{true}}})};
  CHECK_FALSE(match_segment(set.members[0], extra));

  const auto rewritten = rewrite_member(set, 1, 0, *b);
  REQUIRE(rewritten.size() == 1);
  CHECK(rewritten[0] == act("Fs.MoveFile", {{"src", str("a")}, {"dst", str("b")}}));
  CHECK(rewrite_member(set, 0, 1, *b) == good);
}

TEST_CASE("structural checks reject malformed sets") {
  auto one = testing::move_set();
  one.members.resize(1);
  one.mappings.clear();
  CHECK(error_code([&] { check_equivalence_set(one); }) == ErrorCode::ManifestError);

  auto gap = testing::move_set();
  gap.mappings.erase({0, 1});
  CHECK(error_code([&] { check_equivalence_set(gap); }) == ErrorCode::ManifestError);

  auto dangling = testing::move_set();
  dangling.mappings[{0, 1}].actions[0]["src"] = SlotRef{0, "nope"};
  CHECK(error_code([&] { check_equivalence_set(dangling); }) == ErrorCode::ManifestError);

  CHECK_NOTHROW(check_equivalence_set(testing::move_set()));
}

TEST_CASE("sandbox validation accepts move and rejects the broken set") {
  SandboxSpec sb;
  sb.tools = testing::file_tools();

  const auto ok = validate_equivalence(testing::move_set(), sb, 100, 7);
  CHECK(ok.valid);
  CHECK(ok.cases_run == 100);
  CHECK_FALSE(ok.counterexample);

  const auto bad = validate_equivalence(testing::broken_set(), sb, 100, 7);
  CHECK_FALSE(bad.valid);
  REQUIRE(bad.counterexample);
  CHECK(bad.counterexample->case_index == 0);
  CHECK_FALSE(bad.counterexample->detail.empty());

  const auto again = validate_equivalence(testing::broken_set(), sb, 100, 7);
  CHECK(again.valid == bad.valid);
  CHECK(again.counterexample->case_index == bad.counterexample->case_index);
  CHECK(again.counterexample->environment == bad.counterexample->environment);

  auto unknown = testing::alias_set("u", "Fs.Nope", "Fs.MoveFile");
  CHECK(error_code([&] { validate_equivalence(unknown, sb, 10, 1); }) == ErrorCode::UnknownTool);
}

TEST_CASE("natural estimation counts greedy occurrences") {
  const auto set = testing::move_set();
  const auto move = [](const char* s, const char* d) { return act("Fs.MoveFile", {{"src", str(s)}, {"dst", str(d)}}); };
  Corpus c{{"q1", {}, {move("a", "b"), move("c", "d"), act("Other")}, "r"},
           {"q2", {}, {act("Fs.CopyFile", {{"src", str("x")}, {"dst", str("y")}}),
                       act("Fs.DeleteFile", {{"path", str("x")}}), move("e", "f")}, "r"}};
  auto [dist, count] = estimate_natural_distribution(c, set);
  CHECK(count == 4);
  CHECK(dist == Distribution{0.75, 0.25});

  Corpus none{{"q", {}, {act("Other")}, "r"}};
  CHECK(error_code([&] { estimate_natural_distribution(none, set); }) == ErrorCode::NoObservations);
}

TEST_CASE("pool json round trip and integrity checks") {
  PassPool pool;
  pool.domain = "files";
  pool.tools = testing::file_tools();
  pool.passes.push_back(testing::make_pass(1, testing::move_set(), {0.6, 0.4}, 1, 2.0));
  pool.passes.push_back(testing::make_pass(2, testing::alias_set("ia", "Fs.Stat", "Fs.MoveFile"), {0.5, 0.5}, 0, 1.0));

  const auto j = to_json(pool);
  const auto back = pool_from_json(j);
  REQUIRE(back.size() == 2);
  CHECK(back.domain == "files");
  CHECK(back.passes[0].eqset == pool.passes[0].eqset);
  CHECK(back.passes[0].biased == pool.passes[0].biased);
  CHECK(back.passes[1].target_index == 0);
  CHECK(back.tools.size() == pool.tools.size());

  auto tampered = j;
  tampered["passes"][0]["biased"] = {0.5, 0.5};
  CHECK_THROWS_AS(pool_from_json(tampered), Error);

  auto dup_rank = j;
  dup_rank["passes"][1]["order_rank"] = 1;
  CHECK_THROWS_AS(pool_from_json(dup_rank), Error);
}
