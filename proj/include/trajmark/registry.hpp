#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include <boost/dynamic_bitset.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "trajmark/equivalence.hpp"
#include "trajmark/rng.hpp"

namespace trajmark {

/// N-bit user id. Bit i (LSB = 0) activates pass_id i + 1.
using Uid = boost::dynamic_bitset<std::uint64_t>;

/// Lowercase hex, most significant nibble first, ceil(N/4) digits.
std::string uid_to_hex(const Uid& uid);
/// Throws SchemaViolation on bad digits, wrong length or bits set above N.
Uid uid_from_hex(std::string_view hex, std::size_t n_bits);

Uid uid_from_pass_ids(const std::vector<int>& pass_ids, std::size_t n_bits);
std::vector<int> pass_ids_from_uid(const Uid& uid);

struct UserRecord {
  Uid uid;
  std::string uid_hex;
  std::vector<int> active_pass_ids;  // sorted
  std::int64_t created_at = 0;       // milliseconds since epoch, or a logical clock in simulations
};

struct Registry {
  std::string domain;
  std::size_t n_passes = 0;
  std::size_t w_min = 5;
  std::size_t w_max = 20;
  std::vector<UserRecord> users;

  Registry() = default;
  Registry(std::string domain, std::size_t n_passes, std::size_t w_min = 5, std::size_t w_max = 20);

  bool contains(const std::string& uid_hex) const { return index_.count(uid_hex) != 0; }
  const UserRecord* find(const std::string& uid_hex) const;
  /// Appends after checking weight bounds and uniqueness.
  const UserRecord& append(UserRecord record);

 private:
  std::unordered_set<std::string> index_;
};

/// Exact number of N-bit ids with Hamming weight in [w_min, w_max].
boost::multiprecision::cpp_int capacity(std::size_t n, std::size_t w_min, std::size_t w_max);

/// Draws a weight uniformly in [w_min, w_max], then a uniform id of that weight,
/// redrawing on collision. Throws CapacityExhausted when every id is taken.
const UserRecord& register_user(Registry& reg, Engine& rng, std::int64_t created_at);
const UserRecord& register_user(Registry& reg, std::uint64_t rng_seed);

/// Passes whose (pass_id - 1)-th bit is set, sorted by order_rank. Throws LengthMismatch.
std::vector<WatermarkPass> passes_for_uid(const Uid& uid, const PassPool& pool);

nlohmann::ordered_json to_json(const Registry& reg);
Registry registry_from_json(const nlohmann::ordered_json& j);
Registry load_registry(const std::string& path);
void save_registry(const std::string& path, const Registry& reg);

}  // namespace trajmark
