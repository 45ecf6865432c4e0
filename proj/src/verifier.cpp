#include "trajmark/verifier.hpp"

#include <algorithm>
#include <cmath>

#include "trajmark/error.hpp"
#include "trajmark/injector.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;

Empirical empirical_distribution(const Corpus& suspect, const WatermarkPass& pass) {
  const auto mc = count_members(suspect, pass.eqset);
  Empirical e;
  e.count = mc.total;
  if (mc.total > 0) e.distribution = Distribution::from_counts(mc.counts);
  return e;
}

DetectionResult detect_pass(const Empirical& emp, const WatermarkPass& pass, double theta_j, std::size_t m_min) {
  if (!(theta_j > 0.0 && theta_j <= 1.0)) throw Error(ErrorCode::InvalidRange, "theta_J must lie in (0, 1]");
  DetectionResult r;
  r.pass_id = pass.pass_id;
  r.empirical = emp.distribution;
  r.observation_count = emp.count;
  if (emp.distribution) r.jsd_to_target = js_divergence(*emp.distribution, pass.biased);
  r.conclusive = emp.distribution.has_value() && emp.count >= m_min;
  r.detected = r.conclusive && *r.jsd_to_target < theta_j;
  return r;
}

Verdict classify_model(std::vector<DetectionResult> results, std::size_t theta_n) {
  if (theta_n < 1) throw Error(ErrorCode::InvalidRange, "theta_N must be at least 1");
  Verdict v;
  v.detected_vector = Uid(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const int id = results[i].pass_id;
    if (id < 1 || static_cast<std::size_t>(id) > results.size())
      throw Error(ErrorCode::IndexOutOfRange, "result pass id " + std::to_string(id));
    if (results[i].detected) v.detected_vector.set(static_cast<std::size_t>(id - 1));
  }
  v.n_det = v.detected_vector.count();
  v.classified_as_imitation = v.n_det >= theta_n;
  v.results = std::move(results);
  return v;
}

Verdict verify_suspect(const Corpus& suspect, const PassPool& pool, const Thresholds& th) {
  std::vector<DetectionResult> results;
  results.reserve(pool.size());
  for (const auto& pass : pool.passes)
    results.push_back(detect_pass(empirical_distribution(suspect, pass), pass, th.theta_j, th.m_min));
  return classify_model(std::move(results), th.theta_n);
}

double cosine_similarity(const Uid& v, const Uid& p) {
  if (v.size() != p.size()) throw Error(ErrorCode::LengthMismatch, "bit vectors differ in length");
  const auto nv = v.count();
  const auto np = p.count();
  if (nv == 0 || np == 0) return 0.0;
  const auto both = (v & p).count();
  return static_cast<double>(both) / (std::sqrt(static_cast<double>(nv)) * std::sqrt(static_cast<double>(np)));
}

std::vector<Match> localize_user(const Uid& detected, const Registry& reg) {
  if (reg.users.empty()) throw Error(ErrorCode::EmptyRegistry, "registry has no users");
  if (detected.size() != reg.n_passes)
    throw Error(ErrorCode::LengthMismatch, "detected vector has " + std::to_string(detected.size()) +
                                               " bits, registry N = " + std::to_string(reg.n_passes));
  std::vector<Match> out;
  out.reserve(reg.users.size());
  for (const auto& u : reg.users) out.push_back({u.uid_hex, cosine_similarity(detected, u.uid), u.created_at});
  std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return a.uid_hex < b.uid_hex;
  });
  return out;
}

json to_json(const Verdict& v, const Thresholds& th) {
  json passes = json::array();
  for (const auto& r : v.results) {
    json jr;
    jr["pass_id"] = r.pass_id;
    jr["observation_count"] = r.observation_count;
    jr["empirical"] = r.empirical ? json(r.empirical->weights()) : json(nullptr);
    jr["jsd_to_target"] = r.jsd_to_target ? json(*r.jsd_to_target) : json(nullptr);
    jr["conclusive"] = r.conclusive;
    jr["detected"] = r.detected;
    passes.push_back(std::move(jr));
  }
  json matches = json::array();
  for (const auto& m : v.localization)
    matches.push_back({{"uid_hex", m.uid_hex}, {"similarity", m.similarity}, {"created_at", m.created_at}});
  json j;
  j["theta_j"] = th.theta_j;
  j["theta_n"] = th.theta_n;
  j["m_min"] = th.m_min;
  j["N"] = v.detected_vector.size();
  j["passes"] = std::move(passes);
  j["detected_bits"] = uid_to_hex(v.detected_vector);
  j["detected_pass_ids"] = pass_ids_from_uid(v.detected_vector);
  j["n_det"] = v.n_det;
  j["classified_as_imitation"] = v.classified_as_imitation;
  j["localization"] = std::move(matches);
  return j;
}

Verdict verdict_from_json(const json& j) {
  try {
    Verdict v;
    const auto n = j.at("N").get<std::size_t>();
    v.detected_vector = uid_from_hex(j.at("detected_bits").get<std::string>(), n);
    v.n_det = j.at("n_det").get<std::size_t>();
    v.classified_as_imitation = j.at("classified_as_imitation").get<bool>();
    if (v.n_det != v.detected_vector.count())
      throw Error(ErrorCode::SchemaViolation, "n_det disagrees with detected_bits");
    for (const auto& jr : j.at("passes")) {
      DetectionResult r;
      r.pass_id = jr.at("pass_id").get<int>();
      r.observation_count = jr.at("observation_count").get<std::size_t>();
      if (!jr.at("empirical").is_null()) r.empirical = Distribution(jr.at("empirical").get<std::vector<double>>());
      if (!jr.at("jsd_to_target").is_null()) r.jsd_to_target = jr.at("jsd_to_target").get<double>();
      r.conclusive = jr.at("conclusive").get<bool>();
      r.detected = jr.at("detected").get<bool>();
      v.results.push_back(std::move(r));
    }
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("verdict: ") + e.what());
  }
}

SuspectProfile profile_suspect(const Corpus& suspect, const PassPool& pool) {
  SuspectProfile p;
  for (const auto& pass : pool.passes) {
    const auto emp = empirical_distribution(suspect, pass);
    p.counts.push_back(emp.count);
    p.jsd.push_back(emp.distribution ? std::optional<double>(js_divergence(*emp.distribution, pass.biased))
                                     : std::nullopt);
  }
  return p;
}

std::size_t count_detections(const SuspectProfile& p, double theta_j, std::size_t m_min) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.jsd.size(); ++i)
    if (p.jsd[i] && p.counts[i] >= m_min && *p.jsd[i] < theta_j) ++n;
  return n;
}

std::vector<GridCell> f1_grid(const std::vector<SuspectProfile>& positives, const std::vector<SuspectProfile>& negatives,
                              const std::vector<double>& theta_j_list, const std::vector<std::size_t>& theta_n_list,
                              std::size_t m_min) {
  if (positives.empty() || negatives.empty())
    throw Error(ErrorCode::InvalidRange, "f1 grid needs positive and negative models");
  std::vector<GridCell> grid;
  for (double tj : theta_j_list) {
    for (std::size_t tn : theta_n_list) {
      GridCell c;
      c.theta_j = tj;
      c.theta_n = tn;
      for (const auto& p : positives) (count_detections(p, tj, m_min) >= tn ? c.tp : c.fn)++;
      for (const auto& p : negatives) (count_detections(p, tj, m_min) >= tn ? c.fp : c.tn)++;
      const double flagged = static_cast<double>(c.tp + c.fp);
      c.precision = flagged > 0 ? static_cast<double>(c.tp) / flagged : 0.0;
      c.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
      c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
      grid.push_back(c);
    }
  }
  return grid;
}

}  // namespace trajmark
