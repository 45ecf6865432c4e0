#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajmark/distribution.hpp"
#include "trajmark/equivalence.hpp"
#include "trajmark/registry.hpp"
#include "trajmark/trajectory.hpp"

namespace trajmark {

struct Thresholds {
  double theta_j = 0.015;
  std::size_t theta_n = 3;
  std::size_t m_min = 30;
};

/// D'_i of one pass over a suspect corpus. `distribution` is empty when no member occurs.
struct Empirical {
  std::optional<Distribution> distribution;
  std::size_t count = 0;
};

Empirical empirical_distribution(const Corpus& suspect, const WatermarkPass& pass);

struct DetectionResult {
  int pass_id = 0;
  std::optional<Distribution> empirical;
  std::size_t observation_count = 0;
  std::optional<double> jsd_to_target;
  bool conclusive = false;
  bool detected = false;
};

/// conclusive <=> count >= m_min; detected <=> conclusive and JSD(D', biased) < theta_j.
DetectionResult detect_pass(const Empirical& emp, const WatermarkPass& pass, double theta_j, std::size_t m_min);

struct Match {
  std::string uid_hex;
  double similarity = 0.0;
  std::int64_t created_at = 0;
};

struct Verdict {
  std::vector<DetectionResult> results;  // one per pool pass, by pass_id
  Uid detected_vector;
  std::size_t n_det = 0;
  bool classified_as_imitation = false;
  std::vector<Match> localization;
};

/// Inconclusive passes count as undetected.
Verdict classify_model(std::vector<DetectionResult> results, std::size_t theta_n);

/// Tests the suspect against every pass in the pool.
Verdict verify_suspect(const Corpus& suspect, const PassPool& pool, const Thresholds& th);

/// |v & p| / (sqrt|v| sqrt|p|); zero when either vector is empty.
double cosine_similarity(const Uid& v, const Uid& p);

/// Cosine ranking of every registered user, descending; ties go to the earlier
/// created_at, then the lexicographically smaller uid. Throws EmptyRegistry / LengthMismatch.
std::vector<Match> localize_user(const Uid& detected, const Registry& reg);

nlohmann::ordered_json to_json(const Verdict& v, const Thresholds& th);
/// Reads back the detected bit vector, n_det and classification of a verdict report.
Verdict verdict_from_json(const nlohmann::ordered_json& j);

/// Per-pass JSD and conclusiveness of one suspect, reusable across threshold grids.
struct SuspectProfile {
  std::vector<std::optional<double>> jsd;  // by pass index
  std::vector<std::size_t> counts;
};

SuspectProfile profile_suspect(const Corpus& suspect, const PassPool& pool);

/// n_det of a profiled suspect under thresholds.
std::size_t count_detections(const SuspectProfile& p, double theta_j, std::size_t m_min);

struct GridCell {
  double theta_j = 0.0;
  std::size_t theta_n = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Classification quality over the theta_J x theta_N grid. Precision is 0 when
/// nothing is flagged; F1 is 0 when precision + recall is 0.
std::vector<GridCell> f1_grid(const std::vector<SuspectProfile>& positives, const std::vector<SuspectProfile>& negatives,
                              const std::vector<double>& theta_j_list, const std::vector<std::size_t>& theta_n_list,
                              std::size_t m_min);

inline const std::vector<double> kDefaultThetaJGrid{0.005, 0.010, 0.015, 0.050, 0.100};
inline const std::vector<std::size_t> kDefaultThetaNGrid{1, 2, 3, 4, 5};

}  // namespace trajmark
