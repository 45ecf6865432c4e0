#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace trajmark {

/// Categorical distribution over the members of one equivalence set.
class Distribution {
 public:
  static constexpr double kTolerance = 1e-12;

  Distribution() = default;
  /// Throws InvalidDistribution unless every weight is in [0,1] and they sum to 1 within kTolerance.
  explicit Distribution(std::vector<double> weights);
  Distribution(std::initializer_list<double> weights) : Distribution(std::vector<double>(weights)) {}

  /// Normalises non-negative counts; throws NoObservations when they sum to zero.
  static Distribution from_counts(std::span<const double> counts);
  static Distribution uniform(std::size_t arity);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<double> weights_;
};

/// Exponential (logit) boost of one member:
///   p'(t) = p(t) e^delta / Z,  p'(j) = p(j) / Z,  Z = p(t) e^delta + sum_{j != t} p(j).
Distribution derive_target_distribution(const Distribution& natural, std::size_t target_index, double delta);

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
double js_divergence(const Distribution& p, const Distribution& q);

/// KL(P || Q) in nats. Throws SupportMismatch when Q is zero where P is not.
double kl_divergence(const Distribution& p, const Distribution& q);

double l1_distance(const Distribution& p, const Distribution& q);

/// eta * a + (1 - eta) * b.
Distribution mix(const Distribution& a, const Distribution& b, double eta);

}  // namespace trajmark
