#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trajmark/equivalence.hpp"
#include "trajmark/rng.hpp"
#include "trajmark/trajectory.hpp"

namespace trajmark {

struct MatchSpan {
  int pass_id = 0;
  std::size_t member = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  Bindings bindings;
};

/// Greedy left-to-right scanner for one equivalence set. At each position the
/// longest member is tried first (ties: lower member index); a match consumes
/// its region, so spans never overlap.
class SetMatcher {
 public:
  explicit SetMatcher(const EquivalenceSet& set);

  std::vector<MatchSpan> scan(std::span<const Action> actions, int pass_id = 0) const;
  /// Member counts only, without materialising spans.
  void count(std::span<const Action> actions, std::vector<double>& counts, std::size_t& total) const;

 private:
  std::optional<std::pair<std::size_t, Bindings>> match_at(std::span<const Action> actions, std::size_t pos) const;

  const EquivalenceSet* set_;
  std::vector<std::size_t> order_;
};

std::vector<MatchSpan> scan_matches(std::span<const Action> actions, const EquivalenceSet& set);
std::vector<MatchSpan> scan_matches(std::span<const Action> actions, const WatermarkPass& pass);

struct EditRecord {
  std::string query_id;
  int pass_id = 0;
  // Position of the span in the sequence as it stood when this edit was applied
  // (earlier edits of the same pass already spliced in).
  std::size_t start = 0;
  std::size_t original_member = 0;
  std::size_t replacement_member = 0;
  Bindings bindings;
  std::vector<Action> original_actions;
  std::vector<Action> rewritten_actions;  // equals original_actions when the draw kept the member

  bool changed() const { return original_member != replacement_member; }
};

nlohmann::ordered_json to_json(const EditRecord& e);
EditRecord edit_from_json(const nlohmann::ordered_json& j);
std::vector<EditRecord> read_edits_file(const std::string& path);
void write_edits_file(const std::string& path, std::span<const EditRecord> edits);

/// Identifies the random stream of every draw: one stream per
/// (seed, uid, query, pass, span index).
struct DrawContext {
  std::uint64_t seed = 0;
  std::string_view uid;
  std::string_view query_id;

  Engine span_engine(int pass_id, std::size_t span_index) const;
};

struct PassOutcome {
  std::vector<Action> actions;
  std::vector<EditRecord> edits;
};

/// Scans once, then draws each span's replacement from pass.biased and rewrites
/// it through the set's parameter mapping when the draw differs.
PassOutcome apply_pass(std::span<const Action> actions, const WatermarkPass& pass, const DrawContext& ctx);

struct WatermarkOutcome {
  GreyBoxTrajectory trajectory;
  std::vector<EditRecord> edits;
};

/// Applies `passes` in sequence (they must be sorted by order_rank); each pass
/// rescans the output of the previous one. The response is never touched.
WatermarkOutcome watermark_trajectory(const GreyBoxTrajectory& t, std::span<const WatermarkPass> passes,
                                      std::uint64_t seed, std::string_view uid);

struct CorpusWatermark {
  Corpus corpus;
  std::vector<EditRecord> edits;
};

CorpusWatermark watermark_corpus(const Corpus& corpus, std::span<const WatermarkPass> passes, std::uint64_t seed,
                                 std::string_view uid);

/// Executes the original and rewritten span of an edit from `n_cases` shared
/// random environments; true when every case matches.
bool edit_preserves_semantics(const EditRecord& edit, Scheme scheme, const SandboxSpec& sandbox, std::size_t n_cases,
                              Engine& rng);

}  // namespace trajmark
