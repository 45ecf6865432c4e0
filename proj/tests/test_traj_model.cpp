#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "trajmark/domain.hpp"
#include "trajmark/error.hpp"
#include "trajmark/simkit.hpp"

using namespace trajmark;
using testing::act;
using testing::str;

namespace {

ErrorCode code_of(std::string_view line) {
  try {
    parse_trajectory_line(line);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error for " << line);
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("minimal record parses") {
  auto t = parse_trajectory_line(
      R"({"query_id":"q1","actions":[{"tool":"Gmail.SendEmail","args":{"to":"bob"}}],"response":"sent"})");
  CHECK(t.query_id == "q1");
  CHECK_FALSE(t.user_uid);
  REQUIRE(t.actions.size() == 1);
  CHECK(t.actions[0].tool == "Gmail.SendEmail");
  REQUIRE(t.actions[0].arg("to"));
  CHECK(*t.actions[0].arg("to") == str("bob"));
  CHECK(t.response == "sent");
}

TEST_CASE("parse errors are classified") {
  CHECK(code_of(R"({"query_id":"q2","actions":[],"response":"x"})") == ErrorCode::EmptyActions);
  CHECK(code_of(R"({"query_id":"q2","actions":[)") == ErrorCode::MalformedLine);
  CHECK(code_of(R"({"actions":[{"tool":"A","args":{}}],"response":"x"})") == ErrorCode::SchemaViolation);
  CHECK(code_of(R"({"query_id":7,"actions":[{"tool":"A","args":{}}],"response":"x"})") == ErrorCode::SchemaViolation);
  CHECK(code_of(R"({"query_id":"q","actions":[{"tool":"A","args":{"n":{"a":1}}}],"response":"x"})") ==
        ErrorCode::SchemaViolation);
  CHECK(code_of(R"({"query_id":"q","actions":[{"tool":"A","args":{"n":[1]}}],"response":"x"})") ==
        ErrorCode::SchemaViolation);
  CHECK(code_of(R"({"query_id":"q","actions":[{"tool":"bad tool","args":{}}],"response":"x"})") ==
        ErrorCode::SchemaViolation);
  CHECK(code_of(R"({"query_id":"q","user_uid":"ABC","actions":[{"tool":"A","args":{}}],"response":"x"})") ==
        ErrorCode::SchemaViolation);
}

TEST_CASE("argument order is kept as read") {
  auto t = parse_trajectory_line(R"({"query_id":"q","actions":[{"tool":"A","args":{"z":1,"a":2.5,"m":true}}],"response":""})");
  const auto& args = t.actions[0].args;
  REQUIRE(args.size() == 3);
  CHECK(args[0].first == "z");
  CHECK(args[1].first == "a");
  CHECK(args[2].first == "m");
  CHECK(std::holds_alternative<std::int64_t>(args[0].second));
  CHECK(std::holds_alternative<double>(args[1].second));
  CHECK(std::holds_alternative<bool>(args[2].second));
}

TEST_CASE("serialized form has fixed key order and no trailing whitespace") {
  GreyBoxTrajectory t{"q1", std::string("00ff"), {act("Gmail.SendEmail", {{"to", str("bob")}})}, "sent"};
  const auto line = serialize_trajectory(t);
  CHECK(line ==
        R"({"query_id":"q1","user_uid":"00ff","actions":[{"tool":"Gmail.SendEmail","args":{"to":"bob"}}],"response":"sent"})");
  t.user_uid.reset();
  const auto bare = serialize_trajectory(t);
  CHECK(bare.find("user_uid") == std::string::npos);
  CHECK(bare.ends_with(R"("response":"sent"})"));
  CHECK(bare.find('\n') == std::string::npos);
}

TEST_CASE("round trip and injectivity over 1000 generated trajectories") {
  std::mt19937_64 g(11);
  std::set<std::string> lines;
  std::vector<GreyBoxTrajectory> all;
  for (std::size_t i = 0; i < 1000; ++i) {
    auto t = testing::random_trajectory(g, i);
    const auto line = serialize_trajectory(t);
    CHECK(parse_trajectory_line(line) == t);
    lines.insert(line);
    all.push_back(std::move(t));
  }
  // Distinct query ids make every trajectory distinct, so lines must be too.
  CHECK(lines.size() == all.size());
}

TEST_CASE("corpus stream round trip skips blank lines and reports line numbers") {
  std::mt19937_64 g(3);
  Corpus c;
  for (std::size_t i = 0; i < 20; ++i) c.push_back(testing::random_trajectory(g, i));
  std::stringstream ss;
  write_corpus(ss, c);
  std::stringstream padded("\n" + ss.str() + "\n\n");
  CHECK(read_corpus(padded) == c);

  std::stringstream bad(serialize_trajectory(c[0]) + "\n{oops\n");
  try {
    read_corpus(bad);
    FAIL("expected MalformedLine");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedLine);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("grey-box view drops thoughts and observations") {
  FullTrajectory f{"q", {}, "done"};
  for (int i = 0; i < 3; ++i)
    f.steps.push_back(Step{"think " + std::to_string(i), act("Svc.Op", {{"i", Value{std::int64_t{i}}}}),
                           "obs " + std::to_string(i)});
  auto g = grey_box_view(f);
  CHECK(g.query_id == "q");
  CHECK(g.response == "done");
  REQUIRE(g.actions.size() == 3);
  CHECK(g.actions[2] == f.steps[2].action);

  FullTrajectory lifted{g.query_id, {}, g.response};
  for (const auto& a : g.actions) lifted.steps.push_back(Step{"", a, ""});
  CHECK(grey_box_view(lifted) == g);
}

TEST_CASE("simulated corpora leak no private text and shrink under projection") {
  const auto d = builtin_domain("business");
  const auto full = generate_victim_corpus(d, 200, 5);
  for (const auto& f : full) {
    const auto g = grey_box_view(f);
    CHECK(g.actions.size() == f.steps.size());
    CHECK(token_count(g) < token_count(f));
    const auto line = serialize_trajectory(g);
    CHECK(line.find(kPrivateMarker) == std::string::npos);
    for (const auto& s : f.steps) {
      CHECK(s.thought.find(kPrivateMarker) != std::string::npos);
      CHECK(line.find(s.thought) == std::string::npos);
      CHECK(line.find(s.observation) == std::string::npos);
    }
  }
}
