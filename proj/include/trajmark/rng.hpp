#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace trajmark {

/// 64-bit engine used everywhere. Distributions on top of it are implemented
/// here rather than with <random> adaptors so draws are identical across
/// standard libraries.
using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Stable FNV-1a hash of a string, used to fold textual ids into seeds.
std::uint64_t hash_text(std::string_view text);

/// Seed derivation: fold an ordered list of labels into a root seed.
/// derive_seed(root, {"inject", uid, query_id}) is the documented fan-out
/// scheme; the same tuple always yields the same seed.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t root) : state_(splitmix64(root)) {}

  SeedTree child(std::string_view label) const;
  SeedTree child(std::uint64_t index) const;

  std::uint64_t seed() const { return state_; }
  Engine engine() const { return Engine(state_); }

 private:
  struct Raw {};
  SeedTree(Raw, std::uint64_t state) : state_(state) {}
  std::uint64_t state_;
};

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::string_view> labels);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Engine& rng);

/// Uniform integer in [lo, hi] (inclusive), unbiased via rejection.
std::uint64_t uniform_int(Engine& rng, std::uint64_t lo, std::uint64_t hi);

/// Index drawn from unnormalised non-negative weights.
std::size_t sample_index(Engine& rng, std::span<const double> weights);

bool bernoulli(Engine& rng, double p);

}  // namespace trajmark
