#include "trajmark/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include "trajmark/error.hpp"
#include "trajmark/injector.hpp"
#include "trajmark/rng.hpp"
#include "trajmark/simkit.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---- config -----------------------------------------------------------------

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("domains", c.domains);
    get("pools", c.pools);
    get("seed", c.seed);
    get("out_dir", c.out_dir);
    get("attackers", c.attackers);
    get("benign", c.benign);
    get("eta", c.eta);
    if (j.contains("harvest")) c.harvest = j.at("harvest").get<std::size_t>();
    if (j.contains("verification")) c.verification = j.at("verification").get<std::size_t>();
    get("low_volume", c.low_volume);
    get("theta_j", c.theta_j);
    get("theta_n", c.theta_n);
    get("m_min", c.m_min);
    get("localization_domain", c.localization_domain);
    get("extra_users", c.extra_users);
    get("localization_seeds", c.localization_seeds);
    get("max_dropped", c.max_dropped);
    get("localization_harvest", c.localization_harvest);
    get("localization_verification", c.localization_verification);
    get("deltas", c.deltas);
    get("attack_domain", c.attack_domain);
    get("attack_corpus", c.attack_corpus);
    get("deletion_p", c.deletion_p);
    get("rephrase_p", c.rephrase_p);
    get("overlap_threshold", c.overlap_threshold);
    get("breakage_sample", c.breakage_sample);
    get("stealth_domain", c.stealth_domain);
    get("stealth_deltas", c.stealth_deltas);
    get("stealth_corpus", c.stealth_corpus);
    get("bootstrap", c.bootstrap);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("experiment config: ") + e.what());
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j{{"domains", c.domains}, {"pools", c.pools}, {"seed", c.seed}, {"out_dir", c.out_dir},
         {"attackers", c.attackers}, {"benign", c.benign}, {"eta", c.eta}};
  if (c.harvest) j["harvest"] = *c.harvest;
  if (c.verification) j["verification"] = *c.verification;
  j["low_volume"] = c.low_volume;
  j["theta_j"] = c.theta_j;
  j["theta_n"] = c.theta_n;
  j["m_min"] = c.m_min;
  j["localization_domain"] = c.localization_domain;
  j["extra_users"] = c.extra_users;
  j["localization_seeds"] = c.localization_seeds;
  j["max_dropped"] = c.max_dropped;
  j["localization_harvest"] = c.localization_harvest;
  j["localization_verification"] = c.localization_verification;
  j["deltas"] = c.deltas;
  j["attack_domain"] = c.attack_domain;
  j["attack_corpus"] = c.attack_corpus;
  j["deletion_p"] = c.deletion_p;
  j["rephrase_p"] = c.rephrase_p;
  j["overlap_threshold"] = c.overlap_threshold;
  j["breakage_sample"] = c.breakage_sample;
  j["stealth_domain"] = c.stealth_domain;
  j["stealth_deltas"] = c.stealth_deltas;
  j["stealth_corpus"] = c.stealth_corpus;
  j["bootstrap"] = c.bootstrap;
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    auto c = experiment_config_from_json(json::parse(in));
    // Relative file references resolve against the config's directory.
    const auto base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
      if (!is_builtin_name(p) && fs::path(p).is_relative()) p = (base / p).string();
    };
    for (auto& d : c.domains) resolve(d);
    for (auto& [name, p] : c.pools)
      if (fs::path(p).is_relative()) p = (base / p).string();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, path + ": " + e.what());
  }
}

void check_experiment_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::SchemaViolation, "experiment config: " + what); };
  if (c.domains.empty()) fail("no domains");
  if (c.theta_j.empty() || c.theta_n.empty()) fail("empty threshold lists");
  if (c.eta.empty()) fail("empty eta sweep");
  if (c.localization_seeds == 0) fail("no localization seeds");
  for (double e : c.eta)
    if (!(e >= 0 && e <= 1)) fail("eta outside [0, 1]");
  for (double t : c.theta_j)
    if (!(t > 0 && t <= 1)) fail("theta_j outside (0, 1]");
  std::set<std::string> names;
  for (const auto& d : c.domains) names.insert(resolve_domain(d).name);
  for (const auto& [name, path] : c.pools) {
    if (!names.count(name)) fail("pool given for unknown domain " + name);
    load_pool(path);
  }
}

// ---- shared pipeline --------------------------------------------------------

DomainSpec resolve_domain(const std::string& name_or_path) {
  if (is_builtin_name(name_or_path)) return builtin_domain(name_or_path);
  return load_domain(name_or_path);
}

PreparedDomain prepare_domain(const std::string& name_or_path, std::uint64_t seed,
                              const std::optional<std::string>& pool_path) {
  PreparedDomain p{resolve_domain(name_or_path), {}, std::nullopt};
  if (pool_path) {
    p.pool = load_pool(*pool_path);
    if (p.pool.domain != p.domain.name)
      throw Error(ErrorCode::SchemaViolation, *pool_path + " belongs to domain " + p.pool.domain);
    return p;
  }
  GenpoolOptions o;
  o.seed = derive_seed(seed, {"genpool", p.domain.name});
  p.genpool = generate_pool(p.domain, o);
  p.pool = p.genpool->pool;
  return p;
}

namespace {

PreparedDomain prepare(const ExperimentConfig& c, const std::string& name_or_path) {
  const auto name = resolve_domain(name_or_path).name;
  auto it = c.pools.find(name);
  return prepare_domain(name_or_path, c.seed,
                        it == c.pools.end() ? std::nullopt : std::optional<std::string>(it->second));
}

std::string resolve_in(const ExperimentConfig& c, const std::string& name) {
  for (const auto& d : c.domains)
    if (d == name || resolve_domain(d).name == name) return d;
  return name;
}

void note(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

}  // namespace

Corpus imitation_suspect(const PreparedDomain& p, const Uid& uid, double eta, std::size_t harvest,
                         std::size_t verification, std::uint64_t seed, const std::string& label) {
  const auto passes = passes_for_uid(uid, p.pool);
  const auto clean = generate_grey_corpus(p.domain, harvest, derive_seed(seed, {"harvest", label}), "harvest-" + label);
  const auto wm = watermark_corpus(clean, passes, derive_seed(seed, {"inject"}), uid_to_hex(uid));
  const auto model = fit_surrogate(wm.corpus, p.domain, eta);
  return sample_surrogate(model, p.domain, verification, derive_seed(seed, {"query", label}), "verify-" + label);
}

Corpus benign_suspect(const PreparedDomain& p, std::size_t harvest, std::size_t verification, std::uint64_t seed,
                      const std::string& label) {
  const auto clean = generate_grey_corpus(p.domain, harvest, derive_seed(seed, {"harvest", label}), "harvest-" + label);
  const auto model = fit_surrogate(clean, p.domain, 1.0);
  return sample_surrogate(model, p.domain, verification, derive_seed(seed, {"query", label}), "verify-" + label);
}

// ---- detection grid ---------------------------------------------------------

const GridCell* GridReport::find(const std::string& domain, const std::string& volume, double theta_j,
                                 std::size_t theta_n) const {
  for (const auto& r : rows)
    if (r.domain == domain && r.volume == volume && std::abs(r.cell.theta_j - theta_j) < 1e-12 &&
        r.cell.theta_n == theta_n)
      return &r.cell;
  return nullptr;
}

GridReport run_f1_grid(const ExperimentConfig& c, std::ostream* log) {
  GridReport report;
  for (const auto& dname : c.domains) {
    const auto p = prepare(c, dname);
    const auto& name = p.domain.name;
    const auto seed = derive_seed(c.seed, {"grid", name});
    const std::size_t harvest = c.harvest.value_or(p.domain.sizes.finetune);
    const std::size_t verification = c.verification.value_or(p.domain.sizes.verification);
    Registry reg(name, p.pool.size());
    Engine reg_rng(derive_seed(seed, {"registry"}));
    std::vector<SuspectProfile> pos_full, pos_low, neg_full, neg_low;
    for (std::size_t a = 0; a < c.attackers; ++a) {
      const auto& user = register_user(reg, reg_rng, static_cast<std::int64_t>(a));
      for (double eta : c.eta) {
        const auto label = "attacker" + std::to_string(a) + "-eta" + std::to_string(eta);
        const auto full = imitation_suspect(p, user.uid, eta, harvest, verification, seed, label);
        pos_full.push_back(profile_suspect(full, p.pool));
        const Corpus low(full.begin(), full.begin() + static_cast<long>(std::min(c.low_volume, full.size())));
        pos_low.push_back(profile_suspect(low, p.pool));
        note(log, name + " " + label + " weight " + std::to_string(user.active_pass_ids.size()) + " n_det " +
                      std::to_string(count_detections(pos_full.back(), 0.015, c.m_min)));
      }
    }
    for (std::size_t b = 0; b < c.benign; ++b) {
      const auto label = "benign" + std::to_string(b);
      const auto full = benign_suspect(p, harvest, verification, seed, label);
      neg_full.push_back(profile_suspect(full, p.pool));
      const Corpus low(full.begin(), full.begin() + static_cast<long>(std::min(c.low_volume, full.size())));
      neg_low.push_back(profile_suspect(low, p.pool));
      note(log, name + " " + label + " n_det " + std::to_string(count_detections(neg_full.back(), 0.015, c.m_min)));
    }
    for (const auto& cell : f1_grid(pos_full, neg_full, c.theta_j, c.theta_n, c.m_min))
      report.rows.push_back({name, "full", cell});
    for (const auto& cell : f1_grid(pos_low, neg_low, c.theta_j, c.theta_n, c.m_min))
      report.rows.push_back({name, "low", cell});
  }
  return report;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  if (auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << std::setprecision(6);
  return out;
}

}  // namespace

void write_f1_grid_csv(const std::string& path, const GridReport& r) {
  auto out = open_csv(path);
  out << "domain,volume,theta_j,theta_n,tp,fp,fn,tn,precision,recall,f1\n";
  for (const auto& row : r.rows) {
    const auto& c = row.cell;
    out << row.domain << ',' << row.volume << ',' << c.theta_j << ',' << c.theta_n << ',' << c.tp << ',' << c.fp << ','
        << c.fn << ',' << c.tn << ',' << c.precision << ',' << c.recall << ',' << c.f1 << '\n';
  }
}

// ---- localization -----------------------------------------------------------

double LocalizationReport::mean_accuracy(std::size_t users) const {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.users == users) {
      sum += r.accuracy();
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

LocalizationReport run_localization(const ExperimentConfig& c, std::ostream* log) {
  const auto p = prepare(c, resolve_in(c, c.localization_domain));
  LocalizationReport report;
  report.domain = p.domain.name;
  const std::size_t max_extra = c.extra_users.empty() ? 0 : *std::max_element(c.extra_users.begin(), c.extra_users.end());
  for (std::size_t s = 0; s < c.localization_seeds; ++s) {
    const auto seed = derive_seed(c.seed, {"localization", std::to_string(s)});
    Engine rng(derive_seed(seed, {"registry"}));
    // Attackers first so their ids are fixed; the benign population fills in around them.
    Registry base(p.domain.name, p.pool.size());
    for (std::size_t a = 0; a < c.attackers; ++a) register_user(base, rng, 0);
    for (std::size_t b = 0; b < max_extra; ++b) register_user(base, rng, 0);

    std::vector<Uid> observed;
    for (std::size_t a = 0; a < c.attackers; ++a) {
      const auto& user = base.users[a];
      const auto suspect = imitation_suspect(p, user.uid, 1.0, c.localization_harvest, c.localization_verification,
                                             seed, "attacker" + std::to_string(a));
      auto v = verify_suspect(suspect, p.pool, Thresholds{0.015, 3, c.m_min});
      Uid bits = v.detected_vector;
      // Simulated signal loss: drop up to max_dropped detected bits.
      const auto drop = static_cast<std::size_t>(uniform_int(rng, 0, c.max_dropped));
      for (std::size_t k = 0; k < drop && bits.count() > 1; ++k) {
        auto skip = uniform_int(rng, 0, bits.count() - 1);
        for (auto i = bits.find_first(); i != Uid::npos; i = bits.find_next(i))
          if (skip-- == 0) {
            bits.reset(i);
            break;
          }
      }
      observed.push_back(std::move(bits));
    }

    for (std::size_t extra : c.extra_users) {
      const std::size_t total = c.attackers + extra;
      std::vector<std::size_t> order(total);
      for (std::size_t i = 0; i < total; ++i) order[i] = i;
      for (std::size_t i = total; i > 1; --i) std::swap(order[i - 1], order[uniform_int(rng, 0, i - 1)]);
      Registry reg(p.domain.name, p.pool.size());
      for (std::size_t pos = 0; pos < total; ++pos) {
        UserRecord u = base.users[order[pos]];
        u.created_at = static_cast<std::int64_t>(pos);
        reg.append(std::move(u));
      }
      LocalizationRow row{total, s, 0, c.attackers};
      for (std::size_t a = 0; a < c.attackers; ++a) {
        const auto matches = localize_user(observed[a], reg);
        if (!matches.empty() && matches.front().uid_hex == base.users[a].uid_hex) ++row.correct;
      }
      note(log, "localization seed " + std::to_string(s) + " users " + std::to_string(total) + " top1 " +
                    std::to_string(row.correct) + "/" + std::to_string(row.attackers));
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_localization_csv(const std::string& path, const LocalizationReport& r) {
  auto out = open_csv(path);
  out << "domain,users,seed,correct,attackers,top1_accuracy\n";
  std::set<std::size_t> sizes;
  for (const auto& row : r.rows) {
    sizes.insert(row.users);
    out << r.domain << ',' << row.users << ',' << row.seed_index << ',' << row.correct << ',' << row.attackers << ','
        << row.accuracy() << '\n';
  }
  for (auto users : sizes) out << r.domain << ',' << users << ",mean,,," << r.mean_accuracy(users) << '\n';
}

// ---- delta sweep ------------------------------------------------------------

std::vector<DeltaKldRow> run_delta_kld(const ExperimentConfig& c, std::ostream* log) {
  std::vector<DeltaKldRow> rows;
  for (const auto& dname : c.domains) {
    const auto p = prepare(c, dname);
    for (const auto& pass : p.pool.passes)
      for (double delta : c.deltas)
        rows.push_back({p.domain.name, pass.pass_id, pass.eqset.id, delta,
                        kl_divergence(derive_target_distribution(pass.natural, pass.target_index, delta), pass.natural)});
    note(log, "delta sweep " + p.domain.name + ": " + std::to_string(p.pool.size()) + " passes");
  }
  return rows;
}

void write_delta_kld_csv(const std::string& path, const std::vector<DeltaKldRow>& rows) {
  auto out = open_csv(path);
  out << "domain,pass_id,set_id,delta,kld\n";
  std::map<std::pair<std::string, double>, std::pair<double, std::size_t>> mean;
  for (const auto& r : rows) {
    out << r.domain << ',' << r.pass_id << ',' << r.set_id << ',' << r.delta << ',' << r.kld << '\n';
    auto& m = mean[{r.domain, r.delta}];
    m.first += r.kld;
    ++m.second;
  }
  for (const auto& [key, m] : mean)
    out << key.first << ",mean,," << key.second << ',' << m.first / static_cast<double>(m.second) << '\n';
}

// ---- attack bench -----------------------------------------------------------

const AttackRow* AttackReport::find(const std::string& strategy) const {
  for (const auto& r : rows)
    if (r.metrics.strategy == strategy) return &r;
  return nullptr;
}

AttackReport run_attack_bench(const ExperimentConfig& c, std::ostream* log) {
  const auto p = prepare(c, resolve_in(c, c.attack_domain));
  const auto seed = derive_seed(c.seed, {"attacks"});
  Registry reg(p.domain.name, p.pool.size());
  Engine rng(derive_seed(seed, {"registry"}));
  const auto& user = register_user(reg, rng, 0);
  const auto passes = passes_for_uid(user.uid, p.pool);
  const auto clean = generate_grey_corpus(p.domain, c.attack_corpus, derive_seed(seed, {"harvest"}), "harvest");
  const auto wm = watermark_corpus(clean, passes, derive_seed(seed, {"inject"}), user.uid_hex);
  const std::size_t verification = c.verification.value_or(p.domain.sizes.verification);

  auto post_attack_n_det = [&](const Corpus& harvested, const std::string& label) {
    const auto model = fit_surrogate(harvested, p.domain, 1.0);
    const auto suspect = sample_surrogate(model, p.domain, verification, derive_seed(seed, {"query", label}), "verify-" + label);
    return verify_suspect(suspect, p.pool, Thresholds{0.015, 3, c.m_min}).n_det;
  };

  AttackReport report;
  report.domain = p.domain.name;
  report.active_passes = passes.size();
  report.baseline_n_det = post_attack_n_det(wm.corpus, "baseline");
  note(log, "attack bench baseline n_det " + std::to_string(report.baseline_n_det) + "/" + std::to_string(passes.size()));

  std::vector<EquivalenceSet> candidates;
  for (const auto& pass : p.pool.passes) candidates.push_back(pass.eqset);
  const auto vocabulary = tool_vocabulary(wm.corpus);
  const std::vector<AttackOutcome> outcomes{
      attack_random_deletion(wm.corpus, c.deletion_p, derive_seed(seed, {"random-deletion"})),
      attack_pk_replacement(wm.corpus, vocabulary, derive_seed(seed, {"pk-replace"}), c.overlap_threshold),
      attack_rephrase_stub(wm.corpus, c.rephrase_p, derive_seed(seed, {"rephrase-stub"})),
      attack_fk_replacement(wm.corpus, candidates, derive_seed(seed, {"fk-replace"})),
  };
  for (const auto& o : outcomes) {
    AttackRow row{attack_metrics(o, wm.corpus, wm.edits), 0.0};
    row.metrics.n_det_after = post_attack_n_det(o.attacked, o.strategy);
    row.metrics.detected_after = row.metrics.n_det_after >= 3;
    // Deletion changes lengths without any notion of equivalence; breakage is not defined for it.
    if (o.strategy != "random-deletion")
      row.breakage = semantic_breakage_rate(wm.corpus, o.attacked, p.domain.tools, c.breakage_sample,
                                            derive_seed(seed, {"breakage", o.strategy}));
    note(log, o.strategy + " f1 " + std::to_string(row.metrics.id.f1) + " n_det " +
                  std::to_string(row.metrics.n_det_after));
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_attack_csv(const std::string& path, const AttackReport& r) {
  auto out = open_csv(path);
  out << "domain,strategy,precision,recall,f1,modification_rate,watermark_rate,n_det_after,detected_after,"
         "semantic_breakage\n";
  out << r.domain << ",none,,,,0,,";
  out << r.baseline_n_det << ',' << (r.baseline_n_det >= 3 ? "true" : "false") << ",0\n";
  for (const auto& row : r.rows) {
    const auto& m = row.metrics;
    out << r.domain << ',' << m.strategy << ',' << m.id.precision << ',' << m.id.recall << ',' << m.id.f1 << ','
        << m.modification_rate << ',' << m.watermark_rate << ',' << m.n_det_after << ','
        << (m.detected_after ? "true" : "false") << ',' << row.breakage << '\n';
  }
}

// ---- stealth ----------------------------------------------------------------

StealthReport run_stealth(const ExperimentConfig& c, std::ostream* log) {
  const auto p = prepare(c, resolve_in(c, c.stealth_domain));
  const auto seed = derive_seed(c.seed, {"stealth"});
  Registry reg(p.domain.name, p.pool.size());
  Engine rng(derive_seed(seed, {"registry"}));
  const auto& user = register_user(reg, rng, 0);
  const auto clean = generate_grey_corpus(p.domain, c.stealth_corpus, derive_seed(seed, {"victim"}), "victim");
  const auto reference = generate_grey_corpus(p.domain, c.stealth_corpus, derive_seed(seed, {"reference"}), "reference");

  // Member labels of every match in the clean reference corpus, per pass.
  std::vector<std::vector<std::size_t>> labels(p.pool.size());
  for (std::size_t i = 0; i < p.pool.size(); ++i) {
    SetMatcher matcher(p.pool.passes[i].eqset);
    for (const auto& t : reference)
      for (const auto& m : matcher.scan(t.actions)) labels[i].push_back(m.member);
  }

  StealthReport report;
  report.domain = p.domain.name;
  for (double delta : c.stealth_deltas) {
    PassPool pool = p.pool;
    for (auto& pass : pool.passes) {
      pass.delta = delta;
      pass.biased = derive_target_distribution(pass.natural, pass.target_index, delta);
    }
    const auto passes = passes_for_uid(user.uid, pool);
    const auto wm = watermark_corpus(clean, passes, derive_seed(seed, {"inject"}), user.uid_hex);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& pass = pool.passes[i];
      StealthRow row;
      row.delta = delta;
      row.pass_id = pass.pass_id;
      row.set_id = pass.eqset.id;
      row.active = user.uid.test(i);
      const auto counts = count_members(wm.corpus, pass.eqset);
      row.matches = counts.total;
      if (counts.total == 0 || labels[i].empty()) continue;
      row.jsd = js_divergence(Distribution::from_counts(counts.counts), pass.natural);
      Engine boot(derive_seed(seed, {"bootstrap", pass.eqset.id, std::to_string(delta)}));
      std::vector<double> noise;
      noise.reserve(c.bootstrap);
      std::vector<double> resample(pass.eqset.arity());
      for (std::size_t b = 0; b < c.bootstrap; ++b) {
        std::fill(resample.begin(), resample.end(), 0.0);
        for (std::size_t k = 0; k < counts.total; ++k) resample[labels[i][uniform_int(boot, 0, labels[i].size() - 1)]] += 1;
        noise.push_back(js_divergence(Distribution::from_counts(resample), pass.natural));
      }
      std::sort(noise.begin(), noise.end());
      const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(noise.size()))) - 1;
      row.noise_p99 = noise[std::min(idx, noise.size() - 1)];
      report.rows.push_back(row);
    }
    note(log, "stealth delta " + std::to_string(delta) + " done");
  }
  return report;
}

void write_stealth_csv(const std::string& path, const StealthReport& r) {
  auto out = open_csv(path);
  out << "domain,delta,pass_id,set_id,active,matches,jsd_to_natural,noise_p99,below_noise\n";
  for (const auto& row : r.rows)
    out << r.domain << ',' << row.delta << ',' << row.pass_id << ',' << row.set_id << ',' << (row.active ? 1 : 0) << ','
        << row.matches << ',' << row.jsd << ',' << row.noise_p99 << ',' << (row.below() ? "true" : "false") << '\n';
}

// ---- summary ----------------------------------------------------------------

Summary summarize(const GridReport* grid, const LocalizationReport* loc, const std::vector<DeltaKldRow>* kld,
                  const AttackReport* attacks, const StealthReport* stealth) {
  Summary s;
  auto record = [&](const std::string& key, bool pass, json detail) {
    s.json[key] = json{{"pass", pass}, {"detail", std::move(detail)}};
    s.all_pass = s.all_pass && pass;
  };
  if (grid) {
    std::set<std::string> domains;
    for (const auto& r : grid->rows) domains.insert(r.domain);
    double worst_f1 = 1.0;
    bool precision_drop = true, recall_drop = true;
    json per = json::object();
    for (const auto& d : domains) {
      const auto* def = grid->find(d, "full", 0.015, 3);
      const double f1 = def ? def->f1 : 0.0;
      worst_f1 = std::min(worst_f1, f1);
      double min_precision = 1.0;
      for (const auto& r : grid->rows)
        if (r.domain == d && r.volume == "full" && r.cell.theta_n == 1) min_precision = std::min(min_precision, r.cell.precision);
      const auto* low5 = grid->find(d, "low", 0.015, 5);
      const double recall5 = low5 ? low5->recall : 1.0;
      precision_drop = precision_drop && min_precision < 1.0;
      recall_drop = recall_drop && recall5 < 1.0;
      per[d] = {{"f1_default", f1}, {"min_precision_theta_n1", min_precision}, {"recall_theta_n5_low_volume", recall5}};
    }
    s.json["f1_at_default_thresholds"] = worst_f1;
    record("detection_grid", worst_f1 == 1.0 && precision_drop && recall_drop, per);
  }
  if (loc) {
    std::size_t largest = 0;
    for (const auto& r : loc->rows) largest = std::max(largest, r.users);
    const double acc = loc->mean_accuracy(largest);
    record("localization", acc >= 0.9, {{"domain", loc->domain}, {"users", largest}, {"top1_accuracy", acc}});
  }
  if (kld) {
    bool ok = true;
    std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>> series;
    for (const auto& r : *kld) series[{r.domain, r.pass_id}].push_back({r.delta, r.kld});
    for (auto& [key, pts] : series) {
      std::sort(pts.begin(), pts.end());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].first == 0.0 && pts[i].second != 0.0) ok = false;
        if (i && !(pts[i].second > pts[i - 1].second)) ok = false;
      }
    }
    record("delta_kld_monotone", ok, {{"series", series.size()}});
  }
  if (attacks) {
    const auto* del = attacks->find("random-deletion");
    const auto* pk = attacks->find("pk-replace");
    const auto* fk = attacks->find("fk-replace");
    bool ok = del && pk && fk;
    if (ok) {
      const double fd = del->metrics.id.f1, fp = pk->metrics.id.f1, ff = fk->metrics.id.f1;
      ok = fd < 0.05 && fp < 0.05 && ff > 0.1 && ff < 0.5 && ff > fd && ff > fp;
      record("attack_bench", ok, {{"random_deletion_f1", fd}, {"pk_replace_f1", fp}, {"fk_replace_f1", ff}});
    } else {
      record("attack_bench", false, "missing strategies");
    }
  }
  if (stealth) {
    std::size_t above = 0, total = 0;
    for (const auto& r : stealth->rows) {
      if (r.delta > 3) continue;
      ++total;
      above += !r.below();
    }
    record("stealth", above == 0, {{"rows", total}, {"above_noise", above}});
  }
  return s;
}

}  // namespace trajmark
