#include "trajmark/injector.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "trajmark/error.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;

SetMatcher::SetMatcher(const EquivalenceSet& set) : set_(&set), order_(set.arity()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return set.members[a].size() > set.members[b].size(); });
}

std::optional<std::pair<std::size_t, Bindings>> SetMatcher::match_at(std::span<const Action> actions,
                                                                     std::size_t pos) const {
  const auto& head = actions[pos].tool;
  for (std::size_t m : order_) {
    const auto& member = set_->members[m];
    if (member.patterns.front().tool != head || actions.size() - pos < member.size()) continue;
    if (auto b = match_segment(member, actions.subspan(pos))) return std::make_pair(m, std::move(*b));
  }
  return std::nullopt;
}

std::vector<MatchSpan> SetMatcher::scan(std::span<const Action> actions, int pass_id) const {
  std::vector<MatchSpan> spans;
  for (std::size_t i = 0; i < actions.size();) {
    if (auto hit = match_at(actions, i)) {
      const std::size_t len = set_->members[hit->first].size();
      spans.push_back({pass_id, hit->first, i, len, std::move(hit->second)});
      i += len;
    } else {
      ++i;
    }
  }
  return spans;
}

void SetMatcher::count(std::span<const Action> actions, std::vector<double>& counts, std::size_t& total) const {
  for (std::size_t i = 0; i < actions.size();) {
    if (auto hit = match_at(actions, i)) {
      counts[hit->first] += 1.0;
      ++total;
      i += set_->members[hit->first].size();
    } else {
      ++i;
    }
  }
}

std::vector<MatchSpan> scan_matches(std::span<const Action> actions, const EquivalenceSet& set) {
  return SetMatcher(set).scan(actions);
}

std::vector<MatchSpan> scan_matches(std::span<const Action> actions, const WatermarkPass& pass) {
  return SetMatcher(pass.eqset).scan(actions, pass.pass_id);
}

// ---- edit records -------------------------------------------------------------

namespace {

json actions_json(std::span<const Action> actions) {
  json arr = json::array();
  for (const auto& a : actions) arr.push_back(to_json(a));
  return arr;
}

std::vector<Action> actions_from(const json& j) {
  std::vector<Action> out;
  for (const auto& a : j) out.push_back(action_from_json(a));
  return out;
}

}  // namespace

json to_json(const EditRecord& e) {
  json b = json::object();
  for (const auto& [k, v] : e.bindings) b[k] = to_json(v);
  json j;
  j["query_id"] = e.query_id;
  j["pass_id"] = e.pass_id;
  j["start"] = e.start;
  j["original_member"] = e.original_member;
  j["replacement_member"] = e.replacement_member;
  j["bindings"] = std::move(b);
  j["original_actions"] = actions_json(e.original_actions);
  j["rewritten_actions"] = actions_json(e.rewritten_actions);
  return j;
}

EditRecord edit_from_json(const json& j) {
  try {
    EditRecord e;
    e.query_id = j.at("query_id").get<std::string>();
    e.pass_id = j.at("pass_id").get<int>();
    e.start = j.at("start").get<std::size_t>();
    e.original_member = j.at("original_member").get<std::size_t>();
    e.replacement_member = j.at("replacement_member").get<std::size_t>();
    for (const auto& [k, v] : j.at("bindings").items()) e.bindings.emplace(k, value_from_json(v));
    e.original_actions = actions_from(j.at("original_actions"));
    e.rewritten_actions = actions_from(j.at("rewritten_actions"));
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaViolation, std::string("edit record: ") + ex.what());
  }
}

std::vector<EditRecord> read_edits_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<EditRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(edit_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_edits_file(const std::string& path, std::span<const EditRecord> edits) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  for (const auto& e : edits) out << to_json(e).dump() << '\n';
}

// ---- insertion ----------------------------------------------------------------

Engine DrawContext::span_engine(int pass_id, std::size_t span_index) const {
  return Engine(derive_seed(seed, {"inject", uid, query_id, std::to_string(pass_id), std::to_string(span_index)}));
}

PassOutcome apply_pass(std::span<const Action> actions, const WatermarkPass& pass, const DrawContext& ctx) {
  const auto spans = SetMatcher(pass.eqset).scan(actions, pass.pass_id);
  PassOutcome out;
  out.actions.reserve(actions.size() + spans.size());
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto& span = spans[s];
    out.actions.insert(out.actions.end(), actions.begin() + static_cast<std::ptrdiff_t>(cursor),
                       actions.begin() + static_cast<std::ptrdiff_t>(span.start));
    cursor = span.start + span.length;

    auto rng = ctx.span_engine(pass.pass_id, s);
    const std::size_t draw = sample_index(rng, pass.biased.weights());

    EditRecord edit;
    edit.query_id = std::string(ctx.query_id);
    edit.pass_id = pass.pass_id;
    edit.start = out.actions.size();
    edit.original_member = span.member;
    edit.replacement_member = draw;
    edit.bindings = span.bindings;
    edit.original_actions.assign(actions.begin() + static_cast<std::ptrdiff_t>(span.start),
                                 actions.begin() + static_cast<std::ptrdiff_t>(cursor));
    edit.rewritten_actions =
        draw == span.member ? edit.original_actions : rewrite_member(pass.eqset, span.member, draw, span.bindings);
    out.actions.insert(out.actions.end(), edit.rewritten_actions.begin(), edit.rewritten_actions.end());
    out.edits.push_back(std::move(edit));
  }
  out.actions.insert(out.actions.end(), actions.begin() + static_cast<std::ptrdiff_t>(cursor), actions.end());
  return out;
}

WatermarkOutcome watermark_trajectory(const GreyBoxTrajectory& t, std::span<const WatermarkPass> passes,
                                      std::uint64_t seed, std::string_view uid) {
  for (std::size_t i = 1; i < passes.size(); ++i)
    if (passes[i - 1].order_rank >= passes[i].order_rank)
      throw Error(ErrorCode::InvalidRange, "passes must be sorted by ascending order_rank");
  WatermarkOutcome out;
  out.trajectory = t;
  if (!uid.empty()) out.trajectory.user_uid = std::string(uid);
  const DrawContext ctx{seed, uid, t.query_id};
  for (const auto& pass : passes) {
    auto step = apply_pass(out.trajectory.actions, pass, ctx);
    out.trajectory.actions = std::move(step.actions);
    std::move(step.edits.begin(), step.edits.end(), std::back_inserter(out.edits));
  }
  return out;
}

CorpusWatermark watermark_corpus(const Corpus& corpus, std::span<const WatermarkPass> passes, std::uint64_t seed,
                                 std::string_view uid) {
  CorpusWatermark out;
  out.corpus.reserve(corpus.size());
  for (const auto& t : corpus) {
    auto r = watermark_trajectory(t, passes, seed, uid);
    out.corpus.push_back(std::move(r.trajectory));
    std::move(r.edits.begin(), r.edits.end(), std::back_inserter(out.edits));
  }
  return out;
}

bool edit_preserves_semantics(const EditRecord& edit, Scheme scheme, const SandboxSpec& sandbox, std::size_t n_cases,
                              Engine& rng) {
  for (std::size_t c = 0; c < n_cases; ++c) {
    const auto env = generate_environment(sandbox.tools, edit.original_actions, edit.rewritten_actions, sandbox, rng);
    if (!equivalent_on(sandbox.tools, edit.original_actions, edit.rewritten_actions, env, scheme == Scheme::AE))
      return false;
  }
  return true;
}

}  // namespace trajmark
