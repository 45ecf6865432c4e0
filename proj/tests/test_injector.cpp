#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "trajmark/error.hpp"
#include "trajmark/injector.hpp"

using namespace trajmark;
using testing::act;
using testing::str;

namespace {

Action move(const char* s, const char* d) { return act("Fs.MoveFile", {{"src", str(s)}, {"dst", str(d)}}); }
Action copy(const char* s, const char* d) { return act("Fs.CopyFile", {{"src", str(s)}, {"dst", str(d)}}); }
Action del(const char* p) { return act("Fs.DeleteFile", {{"path", str(p)}}); }
Action call(const char* tool, std::int64_t x) { return act(tool, {{"x", Value{x}}}); }

// Every (start, member) pair that matches, resolved leftmost-first then
// longest-first, skipping anything overlapping an accepted span.
std::vector<std::pair<std::size_t, std::size_t>> brute_force_spans(const std::vector<Action>& a,
                                                                   const EquivalenceSet& set) {
  std::vector<std::pair<std::size_t, std::size_t>> out;  // (start, member)
  std::size_t free_from = 0;
  for (std::size_t start = 0; start < a.size(); ++start) {
    if (start < free_from) continue;
    std::optional<std::size_t> best;
    for (std::size_t m = 0; m < set.arity(); ++m) {
      const auto len = set.members[m].size();
      if (start + len > a.size()) continue;
      if (!match_segment(set.members[m], std::span<const Action>(a).subspan(start, len))) continue;
      if (!best || len > set.members[*best].size()) best = m;
    }
    if (best) {
      out.emplace_back(start, *best);
      free_from = start + set.members[*best].size();
    }
  }
  return out;
}

}  // namespace

TEST_CASE("scan examples") {
  const auto set = testing::move_set();

  const std::vector<Action> ce{copy("a", "b"), del("a")};
  auto spans = scan_matches(ce, set);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].start == 0);
  CHECK(spans[0].length == 2);
  CHECK(spans[0].member == 1);
  CHECK(spans[0].bindings.at("src") == str("a"));
  CHECK(spans[0].bindings.at("dst") == str("b"));

  CHECK(scan_matches(std::vector<Action>{act("Other.Tool")}, set).empty());

  const std::vector<Action> two{move("a", "b"), move("c", "d")};
  spans = scan_matches(two, set);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].start == 0);
  CHECK(spans[1].start == 1);
  CHECK(brute_force_spans(two, set) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 0}});
}

TEST_CASE("scan agrees with brute force on random sequences") {
  const auto set = testing::move_set();
  std::mt19937_64 g(17);
  const char* names[] = {"a", "b"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Action> a;
    const std::size_t n = 1 + g() % 10;
    for (std::size_t i = 0; i < n; ++i) {
      const char* x = names[g() % 2];
      const char* y = names[g() % 2];
      switch (g() % 4) {
        case 0: a.push_back(move(x, y)); break;
        case 1: a.push_back(copy(x, y)); break;
        case 2: a.push_back(del(x)); break;
        default: a.push_back(act("Other.Tool")); break;
      }
    }
    const auto spans = scan_matches(a, set);
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      got.emplace_back(spans[i].start, spans[i].member);
      if (i) CHECK(spans[i - 1].start + spans[i - 1].length <= spans[i].start);
    }
    CHECK(got == brute_force_spans(a, set));
  }
}

TEST_CASE("degenerate and forced draws") {
  const auto pass = testing::make_pass(1, testing::move_set(), {1.0, 0.0}, 0, 2.0);
  REQUIRE(pass.biased == Distribution{1.0, 0.0});
  const DrawContext ctx{1, "u", "q"};

  const std::vector<Action> keep{move("a", "b")};
  auto out = apply_pass(keep, pass, ctx);
  CHECK(out.actions == keep);
  REQUIRE(out.edits.size() == 1);
  CHECK(out.edits[0].replacement_member == 0);
  CHECK_FALSE(out.edits[0].changed());

  const std::vector<Action> swap{act("Head"), copy("a", "b"), del("a"), act("Tail")};
  out = apply_pass(swap, pass, ctx);
  CHECK(out.actions == std::vector<Action>{act("Head"), move("a", "b"), act("Tail")});
  REQUIRE(out.edits.size() == 1);
  CHECK(out.edits[0].original_member == 1);
  CHECK(out.edits[0].replacement_member == 0);
  CHECK(out.edits[0].start == 1);
  CHECK(out.edits[0].original_actions == std::vector<Action>{copy("a", "b"), del("a")});
  CHECK(out.edits[0].rewritten_actions == std::vector<Action>{move("a", "b")});
}

TEST_CASE("replacement frequencies follow the biased distribution") {
  const auto pass = testing::make_pass(4, testing::alias_set("s", "T.A", "T.B"), {0.5, 0.5}, 0, std::log(3.0));
  REQUIRE(pass.biased[0] == doctest::Approx(0.75));
  std::vector<Action> actions;
  for (int i = 0; i < 10000; ++i) actions.push_back(call(i % 2 ? "T.A" : "T.B", i));
  const auto out = apply_pass(actions, pass, DrawContext{42, "00ff", "q"});
  REQUIRE(out.edits.size() == 10000);
  double zeros = 0;
  for (const auto& e : out.edits) zeros += e.replacement_member == 0;
  const double freq = zeros / 10000.0;
  CHECK(freq >= 0.74);
  CHECK(freq <= 0.76);
  // Two-sided binomial z-test at the 0.01 level.
  const double z = (zeros - 7500.0) / std::sqrt(10000.0 * 0.75 * 0.25);
  CHECK(std::abs(z) < 2.576);
}

TEST_CASE("pass order changes the outcome when one rewrite feeds another") {
  // A turns X.A into X.B; B turns X.B into X.C. Both are forced.
  auto a = testing::make_pass(1, testing::alias_set("a", "X.A", "X.B"), {0.0, 1.0}, 1, 0.0);
  auto b = testing::make_pass(2, testing::alias_set("b", "X.B", "X.C"), {0.0, 1.0}, 1, 0.0);
  const GreyBoxTrajectory t{"q", {}, {call("X.A", 1), call("Y.Other", 2), call("X.A", 3)}, "resp"};

  a.order_rank = 1;
  b.order_rank = 2;
  const auto ab = watermark_trajectory(t, std::vector<WatermarkPass>{a, b}, 9, "u");
  CHECK(ab.trajectory.actions == std::vector<Action>{call("X.C", 1), call("Y.Other", 2), call("X.C", 3)});

  a.order_rank = 2;
  b.order_rank = 1;
  const auto ba = watermark_trajectory(t, std::vector<WatermarkPass>{b, a}, 9, "u");
  CHECK(ba.trajectory.actions == std::vector<Action>{call("X.B", 1), call("Y.Other", 2), call("X.B", 3)});
  CHECK(ba.edits.size() == 2);
  CHECK(ab.edits.size() == 4);

  CHECK_THROWS_AS(watermark_trajectory(t, std::vector<WatermarkPass>{a, b}, 9, "u"), Error);
  CHECK(watermark_trajectory(t, {}, 9, "").trajectory == t);
  // A non-empty uid only stamps the serving user's id.
  const auto stamped = watermark_trajectory(t, {}, 9, "0f").trajectory;
  CHECK(stamped.actions == t.actions);
  CHECK(stamped.response == t.response);
  CHECK(stamped.user_uid == std::optional<std::string>("0f"));
}

TEST_CASE("watermarking is deterministic, local and keeps the response") {
  const auto p1 = testing::make_pass(1, testing::move_set(), {0.5, 0.5}, 0, 2.0);
  const auto p2 = testing::make_pass(2, testing::alias_set("s", "T.A", "T.B"), {0.7, 0.3}, 1, 2.0);
  const std::vector<WatermarkPass> passes{p1, p2};
  Corpus corpus;
  std::mt19937_64 g(5);
  for (int i = 0; i < 300; ++i) {
    GreyBoxTrajectory t{"q" + std::to_string(i), {}, {}, "response " + std::to_string(i)};
    for (int k = 0; k < 12; ++k) {
      switch (g() % 5) {
        case 0: t.actions.push_back(move("a", "b")); break;
        case 1: t.actions.push_back(copy("c", "d")); t.actions.push_back(del("c")); break;
        case 2: t.actions.push_back(call("T.A", k)); break;
        case 3: t.actions.push_back(call("T.B", k)); break;
        default: t.actions.push_back(call("Keep.Me", k)); break;
      }
    }
    corpus.push_back(std::move(t));
  }
  const auto once = watermark_corpus(corpus, passes, 77, "abc");
  const auto twice = watermark_corpus(corpus, passes, 77, "abc");
  CHECK(once.corpus == twice.corpus);
  CHECK(once.edits.size() == twice.edits.size());
  const auto other = watermark_corpus(corpus, passes, 78, "abc");
  CHECK_FALSE(other.corpus == once.corpus);

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(once.corpus[i].response == corpus[i].response);
    CHECK(once.corpus[i].query_id == corpus[i].query_id);
    // Untouched tools survive in order.
    std::vector<Action> before, after;
    for (const auto& a : corpus[i].actions)
      if (a.tool == "Keep.Me") before.push_back(a);
    for (const auto& a : once.corpus[i].actions)
      if (a.tool == "Keep.Me") after.push_back(a);
    CHECK(before == after);
  }

  SandboxSpec sb;
  sb.tools = testing::file_tools();
  sb.tools.add(ToolSpec{"T.A", {"x"}, {Effect{Effect::Op::Log, {}, "t {x}", {}, {}, {}}}, "ok", false});
  sb.tools.add(ToolSpec{"T.B", {"x"}, {Effect{Effect::Op::Log, {}, "t {x}", {}, {}, {}}}, "ok", false});
  Engine rng(3);
  std::size_t changed = 0;
  for (const auto& e : once.edits) {
    if (!e.changed()) continue;
    ++changed;
    const auto scheme = e.pass_id == 1 ? Scheme::CE : Scheme::IA;
    CHECK(edit_preserves_semantics(e, scheme, sb, 5, rng));
  }
  CHECK(changed > 100);
}

TEST_CASE("edit log file round trip") {
  testing::TempDir dir("edits");
  const auto pass = testing::make_pass(1, testing::move_set(), {0.5, 0.5}, 0, 2.0);
  const std::vector<WatermarkPass> passes{pass};
  Corpus c{{"q1", {}, {copy("a", "b"), del("a"), move("x", "y")}, "r"}};
  const auto wm = watermark_corpus(c, passes, 1, "u");
  write_edits_file(dir.file("edits.jsonl"), wm.edits);
  const auto back = read_edits_file(dir.file("edits.jsonl"));
  REQUIRE(back.size() == wm.edits.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].query_id == wm.edits[i].query_id);
    CHECK(back[i].start == wm.edits[i].start);
    CHECK(back[i].original_member == wm.edits[i].original_member);
    CHECK(back[i].replacement_member == wm.edits[i].replacement_member);
    CHECK(back[i].bindings == wm.edits[i].bindings);
    CHECK(back[i].rewritten_actions == wm.edits[i].rewritten_actions);
  }
}
