#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trajmark/attacks.hpp"
#include "trajmark/bench.hpp"
#include "trajmark/domain.hpp"
#include "trajmark/error.hpp"
#include "trajmark/genpool.hpp"
#include "trajmark/injector.hpp"
#include "trajmark/registry.hpp"
#include "trajmark/simkit.hpp"
#include "trajmark/verifier.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace trajmark;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAcceptance = 3;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config;
  std::string out_dir;
  bool quiet = false;
};

std::ostream* progress(const Globals& g) { return g.quiet ? nullptr : &std::cerr; }

void write_json(const std::string& path, const json& j) {
  if (auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, path + ": " + e.what());
  }
}

std::string in_dir(const Globals& g, const std::string& path) {
  if (g.out_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(g.out_dir) / path).string();
}

// ---- genpool ----------------------------------------------------------------

struct GenpoolArgs {
  std::string domain = "data";
  std::string manifest;
  std::string out = "pool.json";
  std::optional<double> delta;
  std::size_t cases = 100;
};

int cmd_genpool(const Globals& g, const GenpoolArgs& a) {
  const auto d = resolve_domain(a.domain);
  GenpoolOptions o;
  if (!a.manifest.empty()) o.candidates = load_manifest(a.manifest).candidates;
  o.seed = g.seed;
  o.delta = a.delta;
  o.validation_cases = a.cases;
  const auto r = generate_pool(d, o);
  for (const auto& c : r.candidates) {
    if (c.accepted) continue;
    std::cout << "rejected " << c.id << " (" << to_string(c.scheme) << "): " << c.reason << '\n';
    if (c.counterexample) {
      const auto& ce = *c.counterexample;
      json src = json::array(), dst = json::array();
      for (const auto& x : ce.source_actions) src.push_back(to_json(x));
      for (const auto& x : ce.target_actions) dst.push_back(to_json(x));
      std::cout << "  case " << ce.case_index << ", member " << ce.from << " -> " << ce.to << '\n'
                << "  source " << src.dump() << "\n  rewrite " << dst.dump() << "\n  env " << json(ce.environment).dump()
                << "\n  " << ce.detail << '\n';
    }
  }
  const auto out = in_dir(g, a.out);
  if (auto dir = fs::path(out).parent_path(); !dir.empty()) fs::create_directories(dir);
  save_pool(out, r.pool);
  std::cout << format_scheme_summary(r);
  if (!g.quiet) std::cerr << "wrote " << out << '\n';
  return 0;
}

// ---- register ---------------------------------------------------------------

struct RegisterArgs {
  std::string pool;
  std::string registry = "registry.json";
  std::size_t count = 1;
};

int cmd_register(const Globals& g, const RegisterArgs& a) {
  const auto pool = load_pool(a.pool);
  Registry reg = fs::exists(a.registry) ? load_registry(a.registry) : Registry(pool.domain, pool.size());
  if (reg.domain != pool.domain || reg.n_passes != pool.size())
    throw Error(ErrorCode::LengthMismatch, a.registry + " does not belong to pool " + a.pool);
  // Without --seed, draws depend on the registry size so repeated calls yield new users.
  Engine rng(g.seed_given ? g.seed : derive_seed(reg.users.size(), {"register", pool.domain}));
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch()).count();
  for (std::size_t i = 0; i < a.count; ++i) {
    const auto& u = register_user(reg, rng, now);
    std::cout << u.uid_hex << '\n';
  }
  save_registry(a.registry, reg);
  return 0;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string kind;
  std::string domain = "data";
  std::size_t n = 5000;
  std::string out = "corpus.jsonl";
  std::string full_out;
  std::string harvest;
  double eta = 1.0;
  std::string model_out;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  const auto d = resolve_domain(a.domain);
  if (a.n == 0) throw Error(ErrorCode::InvalidRange, "--n must be at least 1");
  Corpus corpus;
  if (a.kind == "victim") {
    const auto full = generate_victim_corpus(d, a.n, g.seed);
    if (!a.full_out.empty()) {
      std::ofstream out(in_dir(g, a.full_out));
      if (!out) throw Error(ErrorCode::Io, "cannot write " + a.full_out);
      for (const auto& t : full) {
        json steps = json::array();
        for (const auto& s : t.steps)
          steps.push_back({{"thought", s.thought}, {"action", to_json(s.action)}, {"observation", s.observation}});
        out << json{{"query_id", t.query_id}, {"steps", std::move(steps)}, {"response", t.response}}.dump() << '\n';
      }
    }
    for (const auto& t : full) corpus.push_back(grey_box_view(t));
  } else {
    SurrogateModel model;
    if (!a.harvest.empty()) {
      model = fit_surrogate(read_corpus_file(a.harvest), d, a.eta);
    } else if (a.kind == "benign") {
      model = fit_surrogate({}, d, 0.0);
    } else {
      throw Error(ErrorCode::InvalidArguments, "simulate surrogate needs --harvest");
    }
    if (!a.harvest.empty() && !model.fallback_sets.empty() && !g.quiet)
      std::cerr << model.fallback_sets.size() << " set(s) absent from the harvest kept their natural distribution\n";
    if (!a.model_out.empty()) write_json(in_dir(g, a.model_out), to_json(model));
    corpus = sample_surrogate(model, d, a.n, g.seed, a.kind == "benign" ? "benign" : "suspect");
  }
  write_corpus_file(in_dir(g, a.out), corpus);
  if (!g.quiet) std::cerr << "wrote " << corpus.size() << " trajectories to " << in_dir(g, a.out) << '\n';
  return 0;
}

// ---- inject -----------------------------------------------------------------

struct InjectArgs {
  std::string pool, registry, uid, in, out = "wm.jsonl", edits = "edits.jsonl";
};

int cmd_inject(const Globals& g, const InjectArgs& a) {
  const auto pool = load_pool(a.pool);
  const auto reg = load_registry(a.registry);
  const auto* user = reg.find(a.uid);
  if (!user) throw Error(ErrorCode::SchemaViolation, "uid " + a.uid + " is not registered in " + a.registry);
  const auto passes = passes_for_uid(user->uid, pool);
  const auto result = watermark_corpus(read_corpus_file(a.in), passes, g.seed, user->uid_hex);
  write_corpus_file(in_dir(g, a.out), result.corpus);
  write_edits_file(in_dir(g, a.edits), result.edits);
  std::size_t changed = 0;
  for (const auto& e : result.edits) changed += e.changed();
  std::cout << "passes " << passes.size() << ", matches " << result.edits.size() << ", rewritten " << changed << '\n';
  return 0;
}

// ---- verify / localize -------------------------------------------------------

struct VerifyArgs {
  std::string pool, suspect, report = "verdict.json";
  Thresholds th;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
  const auto pool = load_pool(a.pool);
  const auto v = verify_suspect(read_corpus_file(a.suspect), pool, a.th);
  write_json(in_dir(g, a.report), to_json(v, a.th));
  std::cout << "n_det " << v.n_det << " of " << pool.size() << " -> "
            << (v.classified_as_imitation ? "imitation" : "not imitation") << '\n';
  return 0;
}

struct LocalizeArgs {
  std::string verdict, registry;
  std::size_t top = 10;
};

int cmd_localize(const Globals&, const LocalizeArgs& a) {
  const auto v = verdict_from_json(read_json(a.verdict));
  const auto reg = load_registry(a.registry);
  const auto matches = localize_user(v.detected_vector, reg);
  for (std::size_t i = 0; i < matches.size() && i < a.top; ++i)
    std::cout << i + 1 << '\t' << matches[i].uid_hex << '\t' << matches[i].similarity << '\n';
  return 0;
}

// ---- attack -----------------------------------------------------------------

struct AttackArgs {
  std::string strategy = "all";
  std::string in, edits, candidates, out = "attacked.jsonl", metrics = "metrics.csv";
  std::string domain, pool;
  double deletion_p = 0.1;
  double rephrase_p = 0.3;
  double overlap = kDefaultOverlapThreshold;
};

std::vector<EquivalenceSet> load_candidates(const std::string& path) {
  const auto j = read_json(path);
  std::vector<EquivalenceSet> sets;
  if (j.is_object() && j.contains("passes")) {
    for (const auto& p : pool_from_json(j).passes) sets.push_back(p.eqset);
  } else {
    for (auto& s : manifest_from_json(j).candidates) sets.push_back(std::move(s));
  }
  return sets;
}

int cmd_attack(const Globals& g, const AttackArgs& a) {
  const auto corpus = read_corpus_file(a.in);
  const auto edits = read_edits_file(a.edits);
  std::vector<std::string> strategies;
  if (a.strategy == "all")
    strategies = {"random-deletion", "pk-replace", "rephrase-stub", "fk-replace"};
  else
    strategies = {a.strategy};
  std::optional<PreparedDomain> prepared;
  if (!a.domain.empty() && !a.pool.empty()) prepared = prepare_domain(a.domain, g.seed, a.pool);

  std::ofstream csv(in_dir(g, a.metrics));
  if (!csv) throw Error(ErrorCode::Io, "cannot write " + a.metrics);
  csv << "strategy,precision,recall,f1,modification_rate,watermark_rate,dropped_trajectories,n_det_after\n";
  for (const auto& s : strategies) {
    const auto seed = derive_seed(g.seed, {"attack", s});
    AttackOutcome o;
    if (s == "random-deletion") {
      o = attack_random_deletion(corpus, a.deletion_p, seed);
    } else if (s == "pk-replace") {
      o = attack_pk_replacement(corpus, tool_vocabulary(corpus), seed, a.overlap);
    } else if (s == "rephrase-stub") {
      o = attack_rephrase_stub(corpus, a.rephrase_p, seed);
    } else if (s == "fk-replace") {
      if (a.candidates.empty()) throw Error(ErrorCode::InvalidArguments, "fk-replace needs --pool-candidates");
      o = attack_fk_replacement(corpus, load_candidates(a.candidates), seed);
    } else {
      throw Error(ErrorCode::InvalidArguments, "unknown strategy " + s);
    }
    if (o.dropped_trajectories && !g.quiet)
      std::cerr << "warning: " << o.dropped_trajectories << " trajectories lost every action and were dropped\n";
    const auto m = attack_metrics(o, corpus, edits);
    std::string n_det;
    if (prepared) {
      const auto model = fit_surrogate(o.attacked, prepared->domain, 1.0);
      const auto suspect = sample_surrogate(model, prepared->domain, prepared->domain.sizes.verification,
                                            derive_seed(seed, {"query"}), "verify-" + s);
      n_det = std::to_string(verify_suspect(suspect, prepared->pool, Thresholds{}).n_det);
    }
    csv << s << ',' << m.id.precision << ',' << m.id.recall << ',' << m.id.f1 << ',' << m.modification_rate << ','
        << m.watermark_rate << ',' << o.dropped_trajectories << ',' << n_det << '\n';
    std::string out = in_dir(g, a.out);
    if (strategies.size() > 1) out = (fs::path(out).parent_path() / (fs::path(out).stem().string() + "." + s + ".jsonl")).string();
    write_corpus_file(out, o.attacked);
    std::cout << s << "\tP " << m.id.precision << "\tR " << m.id.recall << "\tF1 " << m.id.f1 << '\n';
  }
  return 0;
}

// ---- experiment -------------------------------------------------------------

int cmd_experiment(const Globals& g, const std::string& which) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
  if (g.seed_given) c.seed = g.seed;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  check_experiment_config(c);
  fs::create_directories(c.out_dir);
  auto path = [&](const char* name) { return (fs::path(c.out_dir) / name).string(); };
  auto* log = progress(g);
  const bool all = which == "all";

  json completed = json::array();
  std::optional<GridReport> grid;
  std::optional<LocalizationReport> loc;
  std::optional<std::vector<DeltaKldRow>> kld;
  std::optional<AttackReport> attacks;
  std::optional<StealthReport> stealth;
  auto write_summary = [&] {
    auto s = summarize(grid ? &*grid : nullptr, loc ? &*loc : nullptr, kld ? &*kld : nullptr,
                       attacks ? &*attacks : nullptr, stealth ? &*stealth : nullptr);
    s.json["completed_stages"] = completed;
    s.json["config"] = to_json(c);
    write_json(path("summary.json"), s.json);
    return s;
  };

  if (all || which == "delta-kld") {
    kld = run_delta_kld(c, log);
    write_delta_kld_csv(path("delta_kld.csv"), *kld);
    completed.push_back("delta-kld");
    write_summary();
  }
  if (all || which == "f1-grid") {
    grid = run_f1_grid(c, log);
    write_f1_grid_csv(path("f1_grid.csv"), *grid);
    completed.push_back("f1-grid");
    write_summary();
  }
  if (all || which == "localization") {
    loc = run_localization(c, log);
    write_localization_csv(path("localization.csv"), *loc);
    completed.push_back("localization");
    write_summary();
  }
  if (all || which == "attacks") {
    attacks = run_attack_bench(c, log);
    write_attack_csv(path("attacks.csv"), *attacks);
    completed.push_back("attacks");
    write_summary();
  }
  if (all || which == "stealth") {
    stealth = run_stealth(c, log);
    write_stealth_csv(path("stealth.csv"), *stealth);
    completed.push_back("stealth");
  }
  const auto s = write_summary();
  std::cout << s.json.dump(2) << '\n';
  return s.all_pass ? 0 : kExitAcceptance;
}

// ---- validate ---------------------------------------------------------------

struct ValidateArgs {
  std::string pool, registry, domain, manifest, suspect, edits;
};

int cmd_validate(const Globals& g, const ValidateArgs& a) {
  std::optional<PassPool> pool;
  if (!g.config.empty()) {
    check_experiment_config(load_experiment_config(g.config));
    std::cout << "config ok: " << g.config << '\n';
  }
  if (!a.domain.empty()) {
    const auto d = resolve_domain(a.domain);
    std::cout << "domain ok: " << d.name << " (" << d.tools.size() << " tools, " << d.manifest.candidates.size()
              << " candidates)\n";
  }
  if (!a.manifest.empty()) {
    const auto m = load_manifest(a.manifest);
    for (const auto& s : m.candidates) check_equivalence_set(s);
    std::cout << "manifest ok: " << m.candidates.size() << " candidates\n";
  }
  if (!a.pool.empty()) {
    pool = load_pool(a.pool);
    std::cout << "pool ok: " << pool->size() << " passes\n";
  }
  if (!a.registry.empty()) {
    const auto reg = load_registry(a.registry);
    if (pool && (reg.n_passes != pool->size() || reg.domain != pool->domain))
      throw Error(ErrorCode::LengthMismatch, a.registry + " does not match " + a.pool);
    std::cout << "registry ok: " << reg.users.size() << " users\n";
  }
  if (!a.suspect.empty()) {
    const auto c = read_corpus_file(a.suspect);
    std::cout << "corpus ok: " << c.size() << " trajectories\n";
    if (!a.edits.empty()) {
      watermark_positions(c, read_edits_file(a.edits));
      std::cout << "edits ok\n";
    }
  }
  return 0;
}

// ---- export-domains ---------------------------------------------------------

int cmd_export_domains(const Globals& g) {
  const std::string dir = g.out_dir.empty() ? "domains" : g.out_dir;
  for (const auto& name : builtin_domain_names()) std::cout << save_domain(dir, builtin_domain(name)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajmark: user-traceable watermarks for agent action trajectories"};
  app.set_version_flag("--version", std::string("trajmark ") + TRAJMARK_VERSION + " (pool format " +
                                         std::to_string(kPoolFormatVersion) + ")");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "root seed");
  app.add_option("--config", g.config, "experiment config JSON");
  app.add_option("--out-dir", g.out_dir, "directory for outputs");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  GenpoolArgs gp;
  auto* genpool = app.add_subcommand("genpool", "validate candidates and write a pass pool");
  genpool->add_option("--domain", gp.domain, "built-in domain name or domain file");
  genpool->add_option("--manifest", gp.manifest, "candidate manifest (defaults to the domain's)");
  genpool->add_option("--out", gp.out, "pool file to write");
  genpool->add_option("--delta", gp.delta, "bias strength");
  genpool->add_option("--cases", gp.cases, "sandbox cases per candidate");

  RegisterArgs rg;
  auto* reg = app.add_subcommand("register", "register new users and print their ids");
  reg->add_option("--pool", rg.pool)->required();
  reg->add_option("--registry", rg.registry);
  reg->add_option("--count", rg.count);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate victim, surrogate or benign corpora");
  simulate->add_option("kind", sim.kind)->required()->check(CLI::IsMember({"victim", "surrogate", "benign"}));
  simulate->add_option("--domain", sim.domain);
  simulate->add_option("--n", sim.n);
  simulate->add_option("--out", sim.out);
  simulate->add_option("--full-out", sim.full_out, "victim only: also write trajectories with thoughts");
  simulate->add_option("--harvest", sim.harvest, "harvested corpus the surrogate learns from");
  simulate->add_option("--eta", sim.eta)->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--model-out", sim.model_out, "write the fitted surrogate as JSON");

  InjectArgs inj;
  auto* inject = app.add_subcommand("inject", "watermark a corpus for one user");
  inject->add_option("--pool", inj.pool)->required();
  inject->add_option("--registry", inj.registry)->required();
  inject->add_option("--uid", inj.uid)->required();
  inject->add_option("--in", inj.in)->required();
  inject->add_option("--out", inj.out);
  inject->add_option("--edits", inj.edits);

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "test a suspect corpus against the pool");
  verify->add_option("--pool", ver.pool)->required();
  verify->add_option("--suspect", ver.suspect)->required();
  verify->add_option("--theta-j", ver.th.theta_j);
  verify->add_option("--theta-n", ver.th.theta_n);
  verify->add_option("--m-min", ver.th.m_min);
  verify->add_option("--report", ver.report);

  LocalizeArgs loc;
  auto* localize = app.add_subcommand("localize", "rank registered users against a verdict");
  localize->add_option("--verdict", loc.verdict)->required();
  localize->add_option("--registry", loc.registry)->required();
  localize->add_option("--top", loc.top);

  AttackArgs att;
  auto* attack = app.add_subcommand("attack", "run watermark-removal attacks and score them");
  attack->add_option("--strategy", att.strategy)
      ->check(CLI::IsMember({"random-deletion", "pk-replace", "fk-replace", "rephrase-stub", "all"}));
  attack->add_option("--in", att.in)->required();
  attack->add_option("--edits", att.edits)->required();
  attack->add_option("--pool-candidates", att.candidates, "pool or manifest listing every candidate set");
  attack->add_option("--out", att.out);
  attack->add_option("--metrics", att.metrics);
  attack->add_option("--domain", att.domain, "with --pool: also report post-attack detection");
  attack->add_option("--pool", att.pool);
  attack->add_option("--deletion-p", att.deletion_p);
  attack->add_option("--rephrase-p", att.rephrase_p);
  attack->add_option("--overlap", att.overlap);

  std::string which = "all";
  auto* experiment = app.add_subcommand("experiment", "run the evaluation harness");
  experiment->add_option("which", which)
      ->check(CLI::IsMember({"all", "f1-grid", "localization", "delta-kld", "attacks", "stealth"}));

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "parse files and check cross-references");
  validate->add_option("--pool", val.pool);
  validate->add_option("--registry", val.registry);
  validate->add_option("--domain", val.domain);
  validate->add_option("--manifest", val.manifest);
  validate->add_option("--suspect", val.suspect);
  validate->add_option("--edits", val.edits);

  auto* export_domains = app.add_subcommand("export-domains", "write the built-in domains as JSON files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  g.seed_given = app.count("--seed") > 0;

  try {
    if (*genpool) return cmd_genpool(g, gp);
    if (*reg) return cmd_register(g, rg);
    if (*simulate) return cmd_simulate(g, sim);
    if (*inject) return cmd_inject(g, inj);
    if (*verify) return cmd_verify(g, ver);
    if (*localize) return cmd_localize(g, loc);
    if (*attack) return cmd_attack(g, att);
    if (*experiment) return cmd_experiment(g, which);
    if (*validate) return cmd_validate(g, val);
    if (*export_domains) return cmd_export_domains(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArguments ? kExitUsage : kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
