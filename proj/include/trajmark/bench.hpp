#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajmark/attacks.hpp"
#include "trajmark/domain.hpp"
#include "trajmark/genpool.hpp"
#include "trajmark/registry.hpp"
#include "trajmark/verifier.hpp"

namespace trajmark {

/// Everything the experiment harness needs; loaded from one JSON file with
/// command-line overrides applied on top.
struct ExperimentConfig {
  std::vector<std::string> domains{"data", "business", "social"};  // built-in names or domain file paths
  std::map<std::string, std::string> pools;                        // optional pre-built pool per domain name
  std::uint64_t seed = 20250101;
  std::string out_dir = "results";

  std::size_t attackers = 12;
  std::size_t benign = 12;
  std::vector<double> eta{1.0};
  std::optional<std::size_t> harvest;       // defaults to the domain's finetune size
  std::optional<std::size_t> verification;  // defaults to the domain's verification size
  std::size_t low_volume = 600;
  std::vector<double> theta_j{0.005, 0.010, 0.015, 0.050, 0.100};
  std::vector<std::size_t> theta_n{1, 2, 3, 4, 5};
  std::size_t m_min = 30;

  std::string localization_domain = "data";
  std::vector<std::size_t> extra_users{0, 1000, 2000, 5000};
  std::size_t localization_seeds = 10;
  std::size_t max_dropped = 2;
  std::size_t localization_harvest = 8000;
  std::size_t localization_verification = 4000;

  std::vector<double> deltas{0, 1, 2, 3, 4, 5};

  std::string attack_domain = "data";
  std::size_t attack_corpus = 12000;
  double deletion_p = 0.1;
  double rephrase_p = 0.3;
  double overlap_threshold = kDefaultOverlapThreshold;
  std::size_t breakage_sample = 300;

  std::string stealth_domain = "data";
  std::vector<double> stealth_deltas{0, 1, 2, 3};
  std::size_t stealth_corpus = 5000;
  std::size_t bootstrap = 1000;
};

ExperimentConfig experiment_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);
/// Referenced files exist and parse; lists are non-empty. Throws SchemaViolation or Io.
void check_experiment_config(const ExperimentConfig& c);

struct PreparedDomain {
  DomainSpec domain;
  PassPool pool;
  std::optional<GenpoolResult> genpool;  // absent when the pool came from a file
};

/// A built-in name or a domain file path; the pool is generated unless one is given.
DomainSpec resolve_domain(const std::string& name_or_path);
PreparedDomain prepare_domain(const std::string& name_or_path, std::uint64_t seed,
                              const std::optional<std::string>& pool_path = std::nullopt);

/// Harvest the victim under `uid`, fit a surrogate and return its answers to
/// fresh verification queries.
Corpus imitation_suspect(const PreparedDomain& p, const Uid& uid, double eta, std::size_t harvest,
                         std::size_t verification, std::uint64_t seed, const std::string& label);
/// Same pipeline on a clean harvest.
Corpus benign_suspect(const PreparedDomain& p, std::size_t harvest, std::size_t verification, std::uint64_t seed,
                      const std::string& label);

struct GridRow {
  std::string domain;
  std::string volume;  // full | low
  GridCell cell;
};

struct GridReport {
  std::vector<GridRow> rows;
  const GridCell* find(const std::string& domain, const std::string& volume, double theta_j, std::size_t theta_n) const;
};

GridReport run_f1_grid(const ExperimentConfig& c, std::ostream* log = nullptr);
void write_f1_grid_csv(const std::string& path, const GridReport& r);

struct LocalizationRow {
  std::size_t users = 0;  // registry size
  std::size_t seed_index = 0;
  std::size_t correct = 0;
  std::size_t attackers = 0;
  double accuracy() const { return attackers ? static_cast<double>(correct) / static_cast<double>(attackers) : 0.0; }
};

struct LocalizationReport {
  std::string domain;
  std::vector<LocalizationRow> rows;
  double mean_accuracy(std::size_t users) const;
};

LocalizationReport run_localization(const ExperimentConfig& c, std::ostream* log = nullptr);
void write_localization_csv(const std::string& path, const LocalizationReport& r);

struct DeltaKldRow {
  std::string domain;
  int pass_id = 0;
  std::string set_id;
  double delta = 0.0;
  double kld = 0.0;
};

std::vector<DeltaKldRow> run_delta_kld(const ExperimentConfig& c, std::ostream* log = nullptr);
void write_delta_kld_csv(const std::string& path, const std::vector<DeltaKldRow>& rows);

struct AttackRow {
  AttackMetrics metrics;
  double breakage = 0.0;
};

struct AttackReport {
  std::string domain;
  std::size_t baseline_n_det = 0;
  std::size_t active_passes = 0;
  std::vector<AttackRow> rows;
  const AttackRow* find(const std::string& strategy) const;
};

AttackReport run_attack_bench(const ExperimentConfig& c, std::ostream* log = nullptr);
void write_attack_csv(const std::string& path, const AttackReport& r);

struct StealthRow {
  double delta = 0.0;
  int pass_id = 0;
  std::string set_id;
  bool active = false;
  std::size_t matches = 0;
  double jsd = 0.0;
  double noise_p99 = 0.0;
  bool below() const { return jsd < noise_p99; }
};

struct StealthReport {
  std::string domain;
  std::vector<StealthRow> rows;
};

/// Per-set JSD(watermarked empirical, natural) against the 99th percentile of
/// JSD(bootstrap resample of a clean corpus, natural) at the same match count.
StealthReport run_stealth(const ExperimentConfig& c, std::ostream* log = nullptr);
void write_stealth_csv(const std::string& path, const StealthReport& r);

/// Pass/fail against the acceptance thresholds for whatever parts were run.
struct Summary {
  nlohmann::ordered_json json = nlohmann::ordered_json::object();
  bool all_pass = true;
};

Summary summarize(const GridReport* grid, const LocalizationReport* loc, const std::vector<DeltaKldRow>* kld,
                  const AttackReport* attacks, const StealthReport* stealth);

}  // namespace trajmark
