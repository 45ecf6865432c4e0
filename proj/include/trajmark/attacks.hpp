#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajmark/equivalence.hpp"
#include "trajmark/injector.hpp"
#include "trajmark/sandbox.hpp"
#include "trajmark/trajectory.hpp"

namespace trajmark {

/// Result of one removal attempt. Flagged positions index the actions of the
/// corpus the attack was applied to (for deletion, the removed actions).
struct AttackOutcome {
  std::string strategy;
  Corpus attacked;
  std::vector<std::vector<std::size_t>> flagged;  // per input trajectory, sorted
  std::size_t modified_actions = 0;   // input actions whose content changed or vanished
  std::size_t input_actions = 0;
  std::size_t dropped_trajectories = 0;  // emptied by deletion
};

AttackOutcome attack_random_deletion(const Corpus& corpus, double p, std::uint64_t seed);

/// Tool-name tokens: split on '.', '_' and lower-to-upper case boundaries, lowercased.
std::vector<std::string> name_tokens(std::string_view tool);

/// |A ∩ B| / min(|A|, |B|) over name-token sets.
double name_overlap(std::string_view a, std::string_view b);

/// Tools whose name overlaps `tool` by at least `threshold` (excluding itself), sorted.
std::vector<std::string> near_duplicates(std::string_view tool, std::span<const std::string> vocabulary, double threshold);

inline constexpr double kDefaultOverlapThreshold = 0.6;

/// Flags every action whose tool has a near-duplicate in `vocabulary` and swaps
/// it for a random one, keeping the arguments as they are.
AttackOutcome attack_pk_replacement(const Corpus& corpus, std::span<const std::string> vocabulary, std::uint64_t seed,
                                    double threshold = kDefaultOverlapThreshold);

/// Scans with injector semantics against every candidate set (in order, each
/// pass rescanning the previous output), flags every match and redraws the
/// member uniformly.
AttackOutcome attack_fk_replacement(const Corpus& corpus, std::span<const EquivalenceSet> candidates, std::uint64_t seed);

/// Synonym-table substitution over string argument values with probability p
/// per argument. A lexical stand-in, not a language-model rephrase.
AttackOutcome attack_rephrase_stub(const Corpus& corpus, double p, std::uint64_t seed);

/// Watermark positions (changed edits only) in the coordinates of the
/// watermarked corpus, reconstructed by replaying the edit log in order.
/// Throws CorpusMismatch if an edit does not fit the corpus.
std::vector<std::vector<std::size_t>> watermark_positions(const Corpus& watermarked, std::span<const EditRecord> edits);

struct IdentificationScores {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

IdentificationScores score_identification(const std::vector<std::vector<std::size_t>>& flagged,
                                          const std::vector<std::vector<std::size_t>>& truth);

struct AttackMetrics {
  std::string strategy;
  IdentificationScores id;
  double modification_rate = 0.0;  // modified / input actions
  double watermark_rate = 0.0;     // true watermark positions / input actions
  std::size_t n_det_after = 0;
  bool detected_after = false;
};

/// Identification scores and modification rates. Throws CorpusMismatch when
/// the outcome and ground truth describe different corpora.
AttackMetrics attack_metrics(const AttackOutcome& outcome, const Corpus& watermarked, std::span<const EditRecord> edits);

/// Fraction of trajectories whose attacked actions are no longer equivalent
/// to the originals (unknown tools or bad arguments count as broken).
/// Only meaningful for length-preserving or structure-aware attacks.
double semantic_breakage_rate(const Corpus& original, const Corpus& attacked, const ToolLibrary& tools,
                              std::size_t sample, std::uint64_t seed);

std::vector<std::string> tool_vocabulary(const Corpus& corpus);

}  // namespace trajmark
