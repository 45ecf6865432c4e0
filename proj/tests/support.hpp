#pragma once

// Fixtures and independent oracles shared by the unit tests. Oracles are
// written from the formulas directly and never call into the library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "trajmark/equivalence.hpp"
#include "trajmark/sandbox.hpp"
#include "trajmark/trajectory.hpp"

namespace testing {

using namespace trajmark;

inline Action act(std::string tool, std::vector<std::pair<std::string, Value>> args = {}) {
  return Action{std::move(tool), std::move(args)};
}

inline Value str(const char* s) { return Value{std::string(s)}; }

inline PatternArg slot(std::string name, std::string slot_name) {
  return PatternArg{std::move(name), std::move(slot_name)};
}

/// File sandbox: MoveFile, CopyFile, DeleteFile over keys "file:<path>".
inline ToolLibrary file_tools() {
  using Op = Effect::Op;
  ToolLibrary lib;
  lib.add(ToolSpec{"Fs.MoveFile",
                   {"src", "dst"},
                   {Effect{Op::Read, "file:{src}", {}, "c", {}, {}}, Effect{Op::Write, "file:{dst}", "{c}", {}, {}, {}},
                    Effect{Op::Erase, "file:{src}", {}, {}, {}, {}}},
                   "ok",
                   false});
  lib.add(ToolSpec{"Fs.CopyFile",
                   {"src", "dst"},
                   {Effect{Op::Read, "file:{src}", {}, "c", {}, {}}, Effect{Op::Write, "file:{dst}", "{c}", {}, {}, {}}},
                   "copied {dst}",
                   false});
  lib.add(ToolSpec{"Fs.DeleteFile", {"path"}, {Effect{Op::Erase, "file:{path}", {}, {}, {}, {}}}, "ok", false});
  lib.add(ToolSpec{"Fs.Stat", {"path"}, {Effect{Op::Read, "file:{path}", {}, "c", {}, {}},
                                         Effect{Op::Log, {}, "stat {path}", {}, {}, {}}}, "{c}", true});
  return lib;
}

inline ParamMapping by_slot(const Segment& from, const Segment& to) {
  ParamMapping m;
  for (const auto& p : to.patterns) {
    std::map<std::string, ArgSource> entries;
    for (const auto& a : p.args) {
      if (!a.is_slot()) continue;
      for (std::size_t i = 0; i < from.patterns.size(); ++i)
        for (const auto& b : from.patterns[i].args)
          if (b.is_slot() && b.slot() == a.slot() && !entries.count(a.name)) entries[a.name] = SlotRef{i, a.slot()};
    }
    m.actions.push_back(std::move(entries));
  }
  return m;
}

inline void link_all(EquivalenceSet& set) {
  for (std::size_t i = 0; i < set.arity(); ++i)
    for (std::size_t j = 0; j < set.arity(); ++j)
      if (i != j) set.mappings[{i, j}] = by_slot(set.members[i], set.members[j]);
}

/// {[MoveFile(src,dst)], [CopyFile(src,dst), DeleteFile(src)]}
inline EquivalenceSet move_set() {
  EquivalenceSet set{"fs.move", Scheme::CE, {}, {}};
  set.members.push_back(Segment{{ActionPattern{"Fs.MoveFile", {slot("src", "src"), slot("dst", "dst")}}}});
  set.members.push_back(Segment{{ActionPattern{"Fs.CopyFile", {slot("src", "src"), slot("dst", "dst")}},
                                 ActionPattern{"Fs.DeleteFile", {slot("path", "src")}}}});
  link_all(set);
  return set;
}

/// {[DeleteFile(p)], [CopyFile(p,p)]}: differs by construction.
inline EquivalenceSet broken_set() {
  EquivalenceSet set{"fs.broken", Scheme::CE, {}, {}};
  set.members.push_back(Segment{{ActionPattern{"Fs.DeleteFile", {slot("path", "p")}}}});
  set.members.push_back(Segment{{ActionPattern{"Fs.CopyFile", {slot("src", "p"), slot("dst", "p")}}}});
  link_all(set);
  return set;
}

/// Single-action alias set Svc.A(x) ~ Svc.B(x) for matcher and injector fixtures.
inline EquivalenceSet alias_set(std::string id, std::string a, std::string b) {
  EquivalenceSet set{std::move(id), Scheme::IA, {}, {}};
  set.members.push_back(Segment{{ActionPattern{std::move(a), {slot("x", "x")}}}});
  set.members.push_back(Segment{{ActionPattern{std::move(b), {slot("x", "x")}}}});
  link_all(set);
  return set;
}

inline WatermarkPass make_pass(int id, EquivalenceSet set, Distribution natural, std::size_t target, double delta) {
  WatermarkPass p;
  p.pass_id = id;
  p.order_rank = id;
  p.eqset = std::move(set);
  p.natural = natural;
  p.target_index = target;
  p.delta = delta;
  p.biased = derive_target_distribution(natural, target, delta);
  return p;
}

// ---- oracles ----------------------------------------------------------------

inline std::vector<double> eq1_oracle(const std::vector<double>& p, std::size_t t, double delta) {
  long double boost = std::exp(static_cast<long double>(delta));
  long double z = 0;
  for (std::size_t i = 0; i < p.size(); ++i) z += i == t ? p[i] * boost : p[i];
  std::vector<double> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back(static_cast<double>((i == t ? p[i] * boost : p[i]) / z));
  return out;
}

inline double kld_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

inline double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) s += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) s += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return s;
}

/// Sum of binomial coefficients by Pascal's triangle in unsigned 128-bit.
inline unsigned __int128 capacity_oracle(std::size_t n, std::size_t lo, std::size_t hi) {
  std::vector<unsigned __int128> row{1};
  for (std::size_t i = 1; i <= n; ++i) {
    std::vector<unsigned __int128> next(i + 1, 1);
    for (std::size_t k = 1; k < i; ++k) next[k] = row[k - 1] + row[k];
    row = std::move(next);
  }
  unsigned __int128 s = 0;
  for (std::size_t k = lo; k <= hi; ++k) s += row[k];
  return s;
}

inline std::string to_decimal(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

inline std::vector<double> random_simplex(std::mt19937_64& g, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(k);
  double s = 0;
  for (auto& x : w) s += (x = e(g));
  for (auto& x : w) x /= s;
  // Renormalise so the library's 1e-12 sum check cannot trip on rounding.
  double sum = 0;
  for (std::size_t i = 0; i + 1 < k; ++i) sum += w[i];
  w.back() = 1.0 - sum;
  if (w.back() < 0) w.back() = 0;
  return w;
}

/// Random valid trajectory with mixed scalar argument types and awkward strings.
inline GreyBoxTrajectory random_trajectory(std::mt19937_64& g, std::size_t index) {
  static const std::vector<std::string> tools{"Gmail.SendEmail", "Drive.Upload", "Sheets.Read_Range", "a.b.c", "X9"};
  static const std::vector<std::string> texts{"bob", "", "quote\"d", "tab\tline\nbreak", "caf\xc3\xa9", "back\\slash"};
  GreyBoxTrajectory t;
  t.query_id = "q" + std::to_string(index);
  if (g() % 2) t.user_uid = "0a1b2c";
  const std::size_t n = 1 + g() % 6;
  for (std::size_t i = 0; i < n; ++i) {
    Action a{tools[g() % tools.size()], {}};
    const std::size_t n_args = g() % 4;
    for (std::size_t k = 0; k < n_args; ++k) {
      const std::string name = "arg" + std::to_string(k);
      switch (g() % 4) {
        case 0: a.args.emplace_back(name, Value{texts[g() % texts.size()]}); break;
        case 1: a.args.emplace_back(name, Value{static_cast<std::int64_t>(g() % 2000) - 1000}); break;
        case 2: a.args.emplace_back(name, Value{static_cast<double>(g() % 10000) / 64.0 + 0.5}); break;
        default: a.args.emplace_back(name, Value{g() % 2 == 0}); break;
      }
    }
    t.actions.push_back(std::move(a));
  }
  t.response = texts[g() % texts.size()] + " #" + std::to_string(index);
  return t;
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("trajmark-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
