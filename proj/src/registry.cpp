#include "trajmark/registry.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "trajmark/error.hpp"

namespace trajmark {

using json = nlohmann::ordered_json;

std::string uid_to_hex(const Uid& uid) {
  static constexpr char kHex[] = "0123456789abcdef";
  const std::size_t digits = std::max<std::size_t>(1, (uid.size() + 3) / 4);
  std::string out(digits, '0');
  for (std::size_t d = 0; d < digits; ++d) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t bit = d * 4 + b;
      if (bit < uid.size() && uid.test(bit)) nibble |= 1u << b;
    }
    out[digits - 1 - d] = kHex[nibble];
  }
  return out;
}

Uid uid_from_hex(std::string_view hex, std::size_t n_bits) {
  const std::size_t digits = std::max<std::size_t>(1, (n_bits + 3) / 4);
  if (hex.size() != digits)
    throw Error(ErrorCode::SchemaViolation,
                "uid '" + std::string(hex) + "' must have " + std::to_string(digits) + " hex digits");
  Uid uid(n_bits);
  for (std::size_t d = 0; d < digits; ++d) {
    const char c = hex[digits - 1 - d];
    unsigned nibble;
    if (c >= '0' && c <= '9')
      nibble = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f')
      nibble = static_cast<unsigned>(c - 'a' + 10);
    else
      throw Error(ErrorCode::SchemaViolation, "uid must be lowercase hex");
    for (std::size_t b = 0; b < 4; ++b) {
      if (!(nibble & (1u << b))) continue;
      const std::size_t bit = d * 4 + b;
      if (bit >= n_bits) throw Error(ErrorCode::SchemaViolation, "uid sets bits above N");
      uid.set(bit);
    }
  }
  return uid;
}

Uid uid_from_pass_ids(const std::vector<int>& pass_ids, std::size_t n_bits) {
  Uid uid(n_bits);
  for (int id : pass_ids) {
    if (id < 1 || static_cast<std::size_t>(id) > n_bits)
      throw Error(ErrorCode::IndexOutOfRange, "pass id " + std::to_string(id) + " outside 1.." + std::to_string(n_bits));
    uid.set(static_cast<std::size_t>(id - 1));
  }
  return uid;
}

std::vector<int> pass_ids_from_uid(const Uid& uid) {
  std::vector<int> ids;
  for (auto i = uid.find_first(); i != Uid::npos; i = uid.find_next(i)) ids.push_back(static_cast<int>(i + 1));
  return ids;
}

Registry::Registry(std::string domain_, std::size_t n, std::size_t lo, std::size_t hi)
    : domain(std::move(domain_)), n_passes(n), w_min(lo), w_max(hi) {
  if (!(lo <= hi && hi <= n)) throw Error(ErrorCode::InvalidRange, "need 0 <= w_min <= w_max <= N");
}

const UserRecord* Registry::find(const std::string& uid_hex) const {
  if (!contains(uid_hex)) return nullptr;
  for (const auto& u : users)
    if (u.uid_hex == uid_hex) return &u;
  return nullptr;
}

const UserRecord& Registry::append(UserRecord record) {
  if (record.uid.size() != n_passes) throw Error(ErrorCode::LengthMismatch, "uid length differs from N");
  const std::size_t w = record.uid.count();
  if (w < w_min || w > w_max)
    throw Error(ErrorCode::InvalidRange, "uid weight " + std::to_string(w) + " outside [" + std::to_string(w_min) +
                                             ", " + std::to_string(w_max) + "]");
  if (record.active_pass_ids != pass_ids_from_uid(record.uid))
    throw Error(ErrorCode::SchemaViolation, "active_pass_ids disagree with uid bits");
  record.uid_hex = uid_to_hex(record.uid);
  if (!index_.insert(record.uid_hex).second) throw Error(ErrorCode::SchemaViolation, "duplicate uid " + record.uid_hex);
  users.push_back(std::move(record));
  return users.back();
}

boost::multiprecision::cpp_int capacity(std::size_t n, std::size_t w_min, std::size_t w_max) {
  if (!(w_min <= w_max && w_max <= n)) throw Error(ErrorCode::InvalidRange, "need 0 <= w_min <= w_max <= N");
  using boost::multiprecision::cpp_int;
  cpp_int total = 0;
  cpp_int binom = 1;  // C(n, 0)
  for (std::size_t k = 0; k <= w_max; ++k) {
    if (k > 0) binom = binom * (n - k + 1) / k;
    if (k >= w_min) total += binom;
  }
  return total;
}

const UserRecord& register_user(Registry& reg, Engine& rng, std::int64_t created_at) {
  if (capacity(reg.n_passes, reg.w_min, reg.w_max) <= reg.users.size())
    throw Error(ErrorCode::CapacityExhausted, "every uid in the weight range is taken");
  std::vector<std::size_t> bits(reg.n_passes);
  for (;;) {
    const auto w = static_cast<std::size_t>(uniform_int(rng, reg.w_min, reg.w_max));
    // Partial Fisher-Yates: the first w entries become a uniform w-subset.
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = i;
    for (std::size_t i = 0; i < w; ++i) std::swap(bits[i], bits[uniform_int(rng, i, bits.size() - 1)]);
    Uid uid(reg.n_passes);
    for (std::size_t i = 0; i < w; ++i) uid.set(bits[i]);
    if (reg.contains(uid_to_hex(uid))) continue;
    UserRecord rec;
    rec.active_pass_ids = pass_ids_from_uid(uid);
    rec.uid = std::move(uid);
    rec.created_at = created_at;
    return reg.append(std::move(rec));
  }
}

const UserRecord& register_user(Registry& reg, std::uint64_t rng_seed) {
  Engine rng(derive_seed(rng_seed, {"register", reg.domain, std::to_string(reg.users.size())}));
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  return register_user(reg, rng, now);
}

std::vector<WatermarkPass> passes_for_uid(const Uid& uid, const PassPool& pool) {
  if (uid.size() != pool.size())
    throw Error(ErrorCode::LengthMismatch,
                "uid has " + std::to_string(uid.size()) + " bits, pool has " + std::to_string(pool.size()) + " passes");
  std::vector<WatermarkPass> out;
  for (int id : pass_ids_from_uid(uid)) out.push_back(pool.by_id(id));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.order_rank < b.order_rank; });
  return out;
}

json to_json(const Registry& reg) {
  json users = json::array();
  for (const auto& u : reg.users)
    users.push_back({{"uid_hex", u.uid_hex}, {"active_pass_ids", u.active_pass_ids}, {"created_at", u.created_at}});
  return json{{"domain", reg.domain}, {"N", reg.n_passes}, {"w_min", reg.w_min},
              {"w_max", reg.w_max},   {"users", std::move(users)}};
}

Registry registry_from_json(const json& j) {
  try {
    Registry reg(j.at("domain").get<std::string>(), j.at("N").get<std::size_t>(), j.at("w_min").get<std::size_t>(),
                 j.at("w_max").get<std::size_t>());
    for (const auto& ju : j.at("users")) {
      UserRecord rec;
      rec.uid = uid_from_hex(ju.at("uid_hex").get<std::string>(), reg.n_passes);
      rec.active_pass_ids = ju.at("active_pass_ids").get<std::vector<int>>();
      rec.created_at = ju.at("created_at").get<std::int64_t>();
      reg.append(std::move(rec));
    }
    return reg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("registry: ") + e.what());
  }
}

Registry load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return registry_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedLine, path + ": " + e.what());
  }
}

void save_registry(const std::string& path, const Registry& reg) {
  // Write-then-rename so a crash never leaves a truncated registry behind.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    out << to_json(reg).dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace trajmark
