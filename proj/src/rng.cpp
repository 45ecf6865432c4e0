#include "trajmark/rng.hpp"

#include <numeric>

namespace trajmark {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SeedTree SeedTree::child(std::string_view label) const {
  return SeedTree(Raw{}, splitmix64(state_ ^ hash_text(label)));
}

SeedTree SeedTree::child(std::uint64_t index) const {
  return SeedTree(Raw{}, splitmix64(state_ + splitmix64(index ^ 0x5bd1e995ULL)));
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::string_view> labels) {
  SeedTree node(root);
  for (auto label : labels) node = node.child(label);
  return node.seed();
}

double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_int(Engine& rng, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo;
  if (span == ~0ULL) return rng();
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = ~0ULL - (~0ULL % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + x % range;
}

std::size_t sample_index(Engine& rng, std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

bool bernoulli(Engine& rng, double p) { return uniform01(rng) < p; }

}  // namespace trajmark
