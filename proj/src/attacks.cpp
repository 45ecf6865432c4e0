#include "trajmark/attacks.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "trajmark/error.hpp"
#include "trajmark/rng.hpp"

namespace trajmark {

namespace {

Engine trajectory_engine(std::uint64_t seed, std::string_view strategy, const GreyBoxTrajectory& t) {
  return Engine(derive_seed(seed, {"attack", strategy, t.query_id}));
}

}  // namespace

AttackOutcome attack_random_deletion(const Corpus& corpus, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidRange, "deletion probability must lie in [0, 1]");
  AttackOutcome out;
  out.strategy = "random-deletion";
  for (const auto& t : corpus) {
    Engine rng = trajectory_engine(seed, out.strategy, t);
    GreyBoxTrajectory kept{t.query_id, t.user_uid, {}, t.response};
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
      if (bernoulli(rng, p))
        flagged.push_back(i);
      else
        kept.actions.push_back(t.actions[i]);
    }
    out.input_actions += t.actions.size();
    out.modified_actions += flagged.size();
    out.flagged.push_back(std::move(flagged));
    if (kept.actions.empty())
      ++out.dropped_trajectories;
    else
      out.attacked.push_back(std::move(kept));
  }
  return out;
}

std::vector<std::string> name_tokens(std::string_view tool) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < tool.size(); ++i) {
    const auto c = static_cast<unsigned char>(tool[i]);
    if (c == '.' || c == '_' || c == '-') {
      flush();
      continue;
    }
    if (std::isupper(c) && i > 0 && std::islower(static_cast<unsigned char>(tool[i - 1]))) flush();
    cur += static_cast<char>(std::tolower(c));
  }
  flush();
  return tokens;
}

double name_overlap(std::string_view a, std::string_view b) {
  const auto ta = name_tokens(a);
  const auto tb = name_tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(std::min(sa.size(), sb.size()));
}

std::vector<std::string> near_duplicates(std::string_view tool, std::span<const std::string> vocabulary,
                                         double threshold) {
  std::vector<std::string> out;
  for (const auto& other : vocabulary)
    if (other != tool && name_overlap(tool, other) >= threshold) out.push_back(other);
  std::sort(out.begin(), out.end());
  return out;
}

AttackOutcome attack_pk_replacement(const Corpus& corpus, std::span<const std::string> vocabulary, std::uint64_t seed,
                                    double threshold) {
  AttackOutcome out;
  out.strategy = "pk-replace";
  std::map<std::string, std::vector<std::string>, std::less<>> dups;
  for (const auto& tool : vocabulary) dups.emplace(tool, near_duplicates(tool, vocabulary, threshold));
  for (const auto& t : corpus) {
    Engine rng = trajectory_engine(seed, out.strategy, t);
    GreyBoxTrajectory attacked = t;
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < attacked.actions.size(); ++i) {
      auto it = dups.find(attacked.actions[i].tool);
      if (it == dups.end() || it->second.empty()) continue;
      flagged.push_back(i);
      attacked.actions[i].tool = it->second[uniform_int(rng, 0, it->second.size() - 1)];
      ++out.modified_actions;
    }
    out.input_actions += t.actions.size();
    out.flagged.push_back(std::move(flagged));
    out.attacked.push_back(std::move(attacked));
  }
  return out;
}

AttackOutcome attack_fk_replacement(const Corpus& corpus, std::span<const EquivalenceSet> candidates,
                                    std::uint64_t seed) {
  AttackOutcome out;
  out.strategy = "fk-replace";
  std::vector<SetMatcher> matchers;
  for (const auto& set : candidates) matchers.emplace_back(set);
  for (const auto& t : corpus) {
    Engine rng = trajectory_engine(seed, out.strategy, t);
    std::vector<Action> actions = t.actions;
    // Input index of each current action; -1 for actions the attack inserted.
    std::vector<long> origin(actions.size());
    for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = static_cast<long>(i);
    std::set<std::size_t> flagged, modified;
    for (std::size_t s = 0; s < candidates.size(); ++s) {
      const auto& set = candidates[s];
      const auto spans = matchers[s].scan(actions);
      if (spans.empty()) continue;
      std::vector<Action> next;
      std::vector<long> next_origin;
      std::size_t pos = 0;
      for (const auto& span : spans) {
        for (; pos < span.start; ++pos) {
          next.push_back(std::move(actions[pos]));
          next_origin.push_back(origin[pos]);
        }
        const auto drawn = static_cast<std::size_t>(uniform_int(rng, 0, set.arity() - 1));
        for (std::size_t k = span.start; k < span.start + span.length; ++k)
          if (origin[k] >= 0) flagged.insert(static_cast<std::size_t>(origin[k]));
        if (drawn == span.member) {
          for (; pos < span.start + span.length; ++pos) {
            next.push_back(std::move(actions[pos]));
            next_origin.push_back(origin[pos]);
          }
          continue;
        }
        for (std::size_t k = span.start; k < span.start + span.length; ++k)
          if (origin[k] >= 0) modified.insert(static_cast<std::size_t>(origin[k]));
        for (auto& a : rewrite_member(set, span.member, drawn, span.bindings)) {
          next.push_back(std::move(a));
          next_origin.push_back(-1);
        }
        pos = span.start + span.length;
      }
      for (; pos < actions.size(); ++pos) {
        next.push_back(std::move(actions[pos]));
        next_origin.push_back(origin[pos]);
      }
      actions = std::move(next);
      origin = std::move(next_origin);
    }
    out.input_actions += t.actions.size();
    out.modified_actions += modified.size();
    out.flagged.emplace_back(flagged.begin(), flagged.end());
    out.attacked.push_back(GreyBoxTrajectory{t.query_id, t.user_uid, std::move(actions), t.response});
  }
  return out;
}

namespace {

const std::map<std::string, std::string, std::less<>>& synonyms() {
  static const std::map<std::string, std::string, std::less<>> table{
      {"orders", "purchases"},     {"customers", "clients"},     {"invoices", "bills"},
      {"sessions", "visits"},      {"events", "occurrences"},    {"products", "items"},
      {"refunds", "reimbursements"}, {"campaigns", "promotions"}, {"revenue", "income"},
      {"region", "area"},          {"price", "cost"},            {"status", "state"},
      {"sales", "selling"},        {"finance", "accounting"},    {"support", "helpdesk"},
      {"archive", "backup"},       {"reports", "summaries"},     {"urgent", "pressing"},
      {"approved", "accepted"},    {"pending", "waiting"},       {"draft", "sketch"},
      {"renewal", "extension"},    {"legal", "counsel"},         {"hello_world", "hi_everyone"},
      {"big_news", "major_update"}, {"thank_you", "many_thanks"}, {"launch_day", "release_day"},
  };
  return table;
}

// Whole-value synonym, else a synonym for the leading stem, else the value unchanged.
std::string rephrase(const std::string& v) {
  const auto& table = synonyms();
  if (auto it = table.find(v); it != table.end()) return it->second;
  for (const auto& [word, syn] : table)
    if (v.size() > word.size() && v.compare(0, word.size(), word) == 0 && v[word.size()] == '_')
      return syn + v.substr(word.size());
  return v;
}

}  // namespace

AttackOutcome attack_rephrase_stub(const Corpus& corpus, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidRange, "rephrase probability must lie in [0, 1]");
  AttackOutcome out;
  out.strategy = "rephrase-stub";
  for (const auto& t : corpus) {
    Engine rng = trajectory_engine(seed, out.strategy, t);
    GreyBoxTrajectory attacked = t;
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < attacked.actions.size(); ++i) {
      bool changed = false;
      for (auto& [name, value] : attacked.actions[i].args) {
        auto* s = std::get_if<std::string>(&value);
        if (!s || !bernoulli(rng, p)) continue;
        auto r = rephrase(*s);
        if (r != *s) {
          *s = std::move(r);
          changed = true;
        }
      }
      if (changed) flagged.push_back(i);
    }
    out.input_actions += t.actions.size();
    out.modified_actions += flagged.size();
    out.flagged.push_back(std::move(flagged));
    out.attacked.push_back(std::move(attacked));
  }
  return out;
}

std::vector<std::vector<std::size_t>> watermark_positions(const Corpus& watermarked, std::span<const EditRecord> edits) {
  std::map<std::string_view, std::vector<const EditRecord*>> by_query;
  for (const auto& e : edits) by_query[e.query_id].push_back(&e);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(watermarked.size());
  std::size_t consumed = 0;
  for (const auto& t : watermarked) {
    auto it = by_query.find(t.query_id);
    if (it == by_query.end()) {
      out.emplace_back();
      continue;
    }
    long original_len = static_cast<long>(t.actions.size());
    for (const auto* e : it->second)
      original_len -= static_cast<long>(e->rewritten_actions.size()) - static_cast<long>(e->original_actions.size());
    if (original_len < 0) throw Error(ErrorCode::CorpusMismatch, t.query_id + ": edit log does not fit the trajectory");
    std::vector<bool> marks(static_cast<std::size_t>(original_len), false);
    for (const auto* e : it->second) {
      const auto len = e->original_actions.size();
      if (e->start + len > marks.size())
        throw Error(ErrorCode::CorpusMismatch, t.query_id + ": edit span out of range");
      bool inherited = false;
      for (std::size_t k = e->start; k < e->start + len; ++k) inherited = inherited || marks[k];
      const auto first = marks.begin() + static_cast<long>(e->start);
      marks.erase(first, first + static_cast<long>(len));
      marks.insert(marks.begin() + static_cast<long>(e->start), e->rewritten_actions.size(), e->changed() || inherited);
    }
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < marks.size(); ++i)
      if (marks[i]) pos.push_back(i);
    out.push_back(std::move(pos));
    ++consumed;
  }
  if (consumed != by_query.size()) throw Error(ErrorCode::CorpusMismatch, "edit log references queries missing from the corpus");
  return out;
}

IdentificationScores score_identification(const std::vector<std::vector<std::size_t>>& flagged,
                                          const std::vector<std::vector<std::size_t>>& truth) {
  if (flagged.size() != truth.size()) throw Error(ErrorCode::CorpusMismatch, "flagged and ground truth cover different corpora");
  IdentificationScores s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::set<std::size_t> f(flagged[i].begin(), flagged[i].end());
    std::size_t hit = 0;
    for (auto p : truth[i]) hit += f.count(p);
    s.tp += hit;
    s.fn += truth[i].size() - hit;
    s.fp += f.size() - hit;
  }
  s.precision = s.tp + s.fp ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
  s.recall = s.tp + s.fn ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

AttackMetrics attack_metrics(const AttackOutcome& outcome, const Corpus& watermarked, std::span<const EditRecord> edits) {
  if (outcome.flagged.size() != watermarked.size())
    throw Error(ErrorCode::CorpusMismatch, "attack outcome covers " + std::to_string(outcome.flagged.size()) +
                                               " trajectories, ground truth " + std::to_string(watermarked.size()));
  std::size_t total = 0;
  for (std::size_t i = 0; i < watermarked.size(); ++i) {
    total += watermarked[i].actions.size();
    for (auto p : outcome.flagged[i])
      if (p >= watermarked[i].actions.size())
        throw Error(ErrorCode::CorpusMismatch, watermarked[i].query_id + ": flagged position out of range");
  }
  const auto truth = watermark_positions(watermarked, edits);
  AttackMetrics m;
  m.strategy = outcome.strategy;
  m.id = score_identification(outcome.flagged, truth);
  if (total) {
    m.modification_rate = static_cast<double>(outcome.modified_actions) / static_cast<double>(total);
    m.watermark_rate = static_cast<double>(m.id.tp + m.id.fn) / static_cast<double>(total);
  }
  return m;
}

double semantic_breakage_rate(const Corpus& original, const Corpus& attacked, const ToolLibrary& tools,
                              std::size_t sample, std::uint64_t seed) {
  if (original.size() != attacked.size()) throw Error(ErrorCode::CorpusMismatch, "corpora differ in size");
  if (original.empty()) return 0.0;
  Engine rng(derive_seed(seed, {"breakage"}));
  const SandboxSpec spec{tools};
  const std::size_t n = std::min(sample, original.size());
  std::size_t broken = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = n == original.size() ? k : static_cast<std::size_t>(uniform_int(rng, 0, original.size() - 1));
    try {
      const auto env = generate_environment(tools, original[i].actions, attacked[i].actions, spec, rng);
      if (!equivalent_on(tools, original[i].actions, attacked[i].actions, env, true)) ++broken;
    } catch (const Error&) {
      ++broken;
    }
  }
  return static_cast<double>(broken) / static_cast<double>(n);
}

std::vector<std::string> tool_vocabulary(const Corpus& corpus) {
  std::set<std::string> names;
  for (const auto& t : corpus)
    for (const auto& a : t.actions) names.insert(a.tool);
  return {names.begin(), names.end()};
}

}  // namespace trajmark
