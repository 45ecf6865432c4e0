#include "trajmark/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trajmark/error.hpp"

namespace trajmark {

Distribution::Distribution(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorCode::InvalidDistribution, "empty distribution");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0))
      throw Error(ErrorCode::InvalidDistribution, "weight " + std::to_string(w) + " outside [0,1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kTolerance)
    throw Error(ErrorCode::InvalidDistribution, "weights sum to " + std::to_string(sum));
}

Distribution Distribution::from_counts(std::span<const double> counts) {
  if (counts.empty()) throw Error(ErrorCode::InvalidDistribution, "empty count vector");
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw Error(ErrorCode::InvalidDistribution, "negative count");
    total += c;
  }
  if (total <= 0.0) throw Error(ErrorCode::NoObservations, "all counts are zero");
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) w[i] = counts[i] / total;
  return Distribution(std::move(w));
}

Distribution Distribution::uniform(std::size_t arity) {
  if (arity == 0) throw Error(ErrorCode::InvalidDistribution, "empty distribution");
  return Distribution(std::vector<double>(arity, 1.0 / static_cast<double>(arity)));
}

Distribution derive_target_distribution(const Distribution& natural, std::size_t target_index, double delta) {
  if (natural.size() == 0) throw Error(ErrorCode::InvalidDistribution, "empty distribution");
  if (target_index >= natural.size())
    throw Error(ErrorCode::IndexOutOfRange, "target " + std::to_string(target_index) + " of " +
                                                std::to_string(natural.size()));
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw Error(ErrorCode::InvalidDistribution, "delta must be finite and non-negative");
  // Renormalizing an already-normalized vector can move it by an ulp; no boost means no change.
  if (delta == 0.0) return natural;

  const double boosted = natural[target_index] * std::exp(delta);
  double rest = 0.0;
  for (std::size_t j = 0; j < natural.size(); ++j)
    if (j != target_index) rest += natural[j];
  const double z = boosted + rest;

  std::vector<double> w(natural.size());
  for (std::size_t j = 0; j < natural.size(); ++j) w[j] = j == target_index ? boosted / z : natural[j] / z;
  return Distribution(std::move(w));
}

namespace {

void require_same_arity(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size())
    throw Error(ErrorCode::ArityMismatch,
                std::to_string(p.size()) + " vs " + std::to_string(q.size()) + " members");
}

}  // namespace

double js_divergence(const Distribution& p, const Distribution& q) {
  require_same_arity(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    const double a = p[i] > 0.0 ? p[i] * std::log2(p[i] / m) : 0.0;
    const double b = q[i] > 0.0 ? q[i] * std::log2(q[i] / m) : 0.0;
    acc += a + b;  // one commutative add per member keeps JSD(P,Q) == JSD(Q,P) bit for bit
  }
  // Rounding can leave tiny negatives or values a hair above 1.
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  require_same_arity(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw Error(ErrorCode::SupportMismatch, "Q has zero mass at member " + std::to_string(i));
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(acc, 0.0);
}

double l1_distance(const Distribution& p, const Distribution& q) {
  require_same_arity(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return acc;
}

Distribution mix(const Distribution& a, const Distribution& b, double eta) {
  require_same_arity(a, b);
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidRange, "mixing weight outside [0,1]");
  std::vector<double> w(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += w[i] = eta * a[i] + (1.0 - eta) * b[i];
  for (auto& x : w) x /= sum;
  return Distribution(std::move(w));
}

}  // namespace trajmark
