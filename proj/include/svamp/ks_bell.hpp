#pragma once

// The 18-vector Kochen-Specker set in dimension four, its nine measurement
// bases, and the (2,9,4) Bell functional built from its orthogonality graph.
//
// Indexing is 1-based throughout the public surface: vectors 1..18 in
// printed order, settings 1..9 in printed basis order, outcomes 1..4 in
// printed slot order.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace svamp {

inline constexpr int kNumSettings = 9;
inline constexpr int kNumOutcomes = 4;
inline constexpr int kNumSettingPairs = kNumSettings * kNumSettings;   // 81
inline constexpr int kNumOutcomePairs = kNumOutcomes * kNumOutcomes;   // 16
inline constexpr std::size_t kTableSize = kNumSettingPairs * kNumOutcomePairs;  // 1296

struct SettingPair {
  int alice = 1;
  int bob = 1;
  friend bool operator==(const SettingPair&, const SettingPair&) = default;
  friend auto operator<=>(const SettingPair&, const SettingPair&) = default;
};

struct OutcomePair {
  int alice = 1;
  int bob = 1;
  friend bool operator==(const OutcomePair&, const OutcomePair&) = default;
  friend auto operator<=>(const OutcomePair&, const OutcomePair&) = default;
};

inline bool valid_setting(SettingPair u) {
  return u.alice >= 1 && u.alice <= kNumSettings && u.bob >= 1 && u.bob <= kNumSettings;
}
inline bool valid_outcome(OutcomePair x) {
  return x.alice >= 1 && x.alice <= kNumOutcomes && x.bob >= 1 && x.bob <= kNumOutcomes;
}

/// Row-major position of P(x|u) in a behavior table: (u1, u2, x1, x2), x2 fastest.
inline constexpr std::size_t table_index(SettingPair u, OutcomePair x) {
  return ((static_cast<std::size_t>(u.alice - 1) * kNumSettings + static_cast<std::size_t>(u.bob - 1)) *
              kNumOutcomes +
          static_cast<std::size_t>(x.alice - 1)) *
             kNumOutcomes +
         static_cast<std::size_t>(x.bob - 1);
}

inline constexpr std::size_t setting_index(SettingPair u) {
  return static_cast<std::size_t>(u.alice - 1) * kNumSettings + static_cast<std::size_t>(u.bob - 1);
}

inline constexpr SettingPair setting_from_index(std::size_t k) {
  return {static_cast<int>(k / kNumSettings) + 1, static_cast<int>(k % kNumSettings) + 1};
}

inline constexpr OutcomePair outcome_from_index(std::size_t k) {
  return {static_cast<int>(k / kNumOutcomes) + 1, static_cast<int>(k % kNumOutcomes) + 1};
}

/// The distinguished setting u* = (1,2) and outcome x* = (1,3).
inline constexpr SettingPair kTargetSetting{1, 2};
inline constexpr OutcomePair kTargetOutcome{1, 3};

using Vec4 = std::array<int, 4>;

inline constexpr int dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

struct Membership {
  int basis;  // 1-based
  int slot;   // 1-based
  friend bool operator==(const Membership&, const Membership&) = default;
};

/// Vectors and bases of a (toy or full) Kochen-Specker configuration.
class KSModel {
 public:
  KSModel() = default;

  /// Builds incidence and orthogonality from raw data. `bases` hold 1-based
  /// vector ids. Only structural sanity is checked here; the 18-vector
  /// set's counts are checked by build_ks_model().
  KSModel(std::vector<Vec4> vectors, std::vector<std::array<int, 4>> bases)
      : vectors_(std::move(vectors)), bases_(std::move(bases)) {
    const int n = num_vectors();
    incidence_.assign(static_cast<std::size_t>(n), {});
    for (std::size_t b = 0; b < bases_.size(); ++b) {
      for (std::size_t s = 0; s < 4; ++s) {
        const int id = bases_[b][s];
        if (id < 1 || id > n) throw std::invalid_argument("KSModel: basis references unknown vector");
        incidence_[static_cast<std::size_t>(id - 1)].push_back(
            {static_cast<int>(b) + 1, static_cast<int>(s) + 1});
      }
    }
    orthogonal_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), false);
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b)
        orthogonal_[index(a, b)] = dot(vector(a), vector(b)) == 0;
  }

  int num_vectors() const { return static_cast<int>(vectors_.size()); }
  int num_bases() const { return static_cast<int>(bases_.size()); }

  const Vec4& vector(int id) const { return vectors_.at(static_cast<std::size_t>(id - 1)); }
  const std::vector<Vec4>& vectors() const { return vectors_; }
  const std::vector<std::array<int, 4>>& bases() const { return bases_; }

  /// Vector id measured by `setting` when it yields `outcome`.
  int vector_id(int setting, int outcome) const {
    return bases_.at(static_cast<std::size_t>(setting - 1)).at(static_cast<std::size_t>(outcome - 1));
  }

  const std::vector<Membership>& incidence(int id) const {
    return incidence_.at(static_cast<std::size_t>(id - 1));
  }

  /// Exact integer orthogonality (a vector is never orthogonal to itself here
  /// since all vectors are nonzero).
  bool orthogonal(int a, int b) const { return orthogonal_[index(a, b)]; }

  int orthogonal_edge_count() const {
    int edges = 0;
    for (int a = 1; a <= num_vectors(); ++a)
      for (int b = a + 1; b <= num_vectors(); ++b)
        if (orthogonal(a, b)) ++edges;
    return edges;
  }

  int degree(int id) const {
    int d = 0;
    for (int b = 1; b <= num_vectors(); ++b)
      if (b != id && orthogonal(id, b)) ++d;
    return d;
  }

  friend bool operator==(const KSModel& l, const KSModel& r) {
    return l.vectors_ == r.vectors_ && l.bases_ == r.bases_;
  }

 private:
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a - 1) * vectors_.size() + static_cast<std::size_t>(b - 1);
  }

  std::vector<Vec4> vectors_;
  std::vector<std::array<int, 4>> bases_;
  std::vector<std::vector<Membership>> incidence_;
  std::vector<bool> orthogonal_;
};

/// Throws std::logic_error naming the first violated invariant of the
/// 18-vector set. Used as a self-check of the baked-in constants.
inline void check_ks_invariants(const KSModel& model) {
  auto fail = [](const std::string& what) { throw std::logic_error("KSModel invariant violated: " + what); };
  if (model.num_vectors() != 18) fail("expected 18 vectors");
  if (model.num_bases() != 9) fail("expected 9 bases");
  for (int id = 1; id <= 18; ++id) {
    if (model.incidence(id).size() != 2) fail("vector " + std::to_string(id) + " not in exactly 2 bases");
    if (model.degree(id) != 7) fail("vector " + std::to_string(id) + " not orthogonal to exactly 7 others");
  }
  for (const auto& basis : model.bases())
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        if (!model.orthogonal(basis[i], basis[j])) fail("basis contains a non-orthogonal pair");
  if (model.orthogonal_edge_count() != 63) fail("expected 63 orthogonality edges");
}

inline KSModel build_ks_model() {
  std::vector<Vec4> vectors = {
      {1, 0, 0, 0},  {0, 1, 0, 0},   {0, 0, 1, 1},  {0, 0, 1, -1}, {1, -1, 0, 0}, {1, 1, -1, -1},
      {1, 1, 1, 1},  {1, -1, 1, -1}, {1, 0, -1, 0}, {0, 1, 0, -1}, {1, 0, 1, 0},  {1, 1, -1, 1},
      {-1, 1, 1, 1}, {1, 1, 1, -1},  {1, 0, 0, 1},  {0, 1, -1, 0}, {0, 1, 1, 0},  {0, 0, 0, 1},
  };
  std::vector<std::array<int, 4>> bases = {
      {1, 2, 3, 4},     {4, 5, 6, 7},     {7, 8, 9, 10},   {10, 11, 12, 13}, {13, 14, 15, 16},
      {16, 17, 18, 1},  {2, 9, 11, 18},   {3, 5, 12, 14},  {6, 8, 15, 17},
  };
  KSModel model(std::move(vectors), std::move(bases));
  check_ks_invariants(model);
  return model;
}

/// One entry of S_B: outcome pair x observed under setting pair u.
struct BellTuple {
  OutcomePair x;
  SettingPair u;
  friend bool operator==(const BellTuple&, const BellTuple&) = default;
};

/// Indicator functional B(x,u) over the 1296 table positions, plus the
/// tomography target D = {(x*, u*)}.
class BellFunctional {
 public:
  BellFunctional() { indicator_.fill(false); }

  /// Arbitrary indicator set; duplicates are merged.
  static BellFunctional from_tuples(const std::vector<BellTuple>& tuples,
                                    BellTuple target = {kTargetOutcome, kTargetSetting}) {
    BellFunctional f;
    for (const auto& t : tuples) {
      if (!valid_setting(t.u) || !valid_outcome(t.x)) throw std::invalid_argument("BellFunctional: tuple out of range");
      f.indicator_[table_index(t.u, t.x)] = true;
    }
    f.target_ = target;
    f.rebuild();
    return f;
  }

  bool contains(SettingPair u, OutcomePair x) const { return indicator_[table_index(u, x)]; }
  bool contains_index(std::size_t k) const { return indicator_[k]; }

  /// Tuples in table order (settings-major, then outcomes).
  const std::vector<BellTuple>& tuples() const { return tuples_; }
  std::size_t size() const { return tuples_.size(); }

  const BellTuple& target() const { return target_; }
  bool is_target(SettingPair u, OutcomePair x) const { return u == target_.u && x == target_.x; }

  /// Number of S_B entries with the given setting pair.
  int count_for_setting(SettingPair u) const {
    int c = 0;
    for (int k = 0; k < kNumOutcomePairs; ++k)
      if (contains(u, outcome_from_index(static_cast<std::size_t>(k)))) ++c;
    return c;
  }

  friend bool operator==(const BellFunctional& l, const BellFunctional& r) {
    return l.indicator_ == r.indicator_ && l.target_ == r.target_;
  }

 private:
  void rebuild() {
    tuples_.clear();
    for (std::size_t k = 0; k < kTableSize; ++k) {
      if (!indicator_[k]) continue;
      const SettingPair u = setting_from_index(k / kNumOutcomePairs);
      const OutcomePair x = outcome_from_index(k % kNumOutcomePairs);
      tuples_.push_back({x, u});
    }
  }

  std::array<bool, kTableSize> indicator_{};
  std::vector<BellTuple> tuples_;
  BellTuple target_{kTargetOutcome, kTargetSetting};
};

/// S_B holds (x,u) whenever the vector measured by Alice and the vector
/// measured by Bob are distinct and orthogonal. This orthogonality reading
/// gives |S_B| = 504 (63 edges, both orientations, 4 setting combinations per
/// ordered edge); restricting to pairs that share a printed basis would give 432.
inline BellFunctional build_bell_functional(const KSModel& model) {
  if (model.num_bases() != kNumSettings) throw std::invalid_argument("Bell functional needs 9 bases");
  std::vector<BellTuple> tuples;
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int u2 = 1; u2 <= kNumSettings; ++u2)
      for (int x1 = 1; x1 <= kNumOutcomes; ++x1)
        for (int x2 = 1; x2 <= kNumOutcomes; ++x2) {
          const int a = model.vector_id(u1, x1);
          const int b = model.vector_id(u2, x2);
          if (a != b && model.orthogonal(a, b)) tuples.push_back({{x1, x2}, {u1, u2}});
        }
  return BellFunctional::from_tuples(tuples);
}

/// Co-basis reading of the hyperedge rule, kept for documentation and tests.
inline std::size_t co_basis_count(const KSModel& model) {
  std::size_t count = 0;
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int u2 = 1; u2 <= kNumSettings; ++u2)
      for (int x1 = 1; x1 <= kNumOutcomes; ++x1)
        for (int x2 = 1; x2 <= kNumOutcomes; ++x2) {
          const int a = model.vector_id(u1, x1);
          const int b = model.vector_id(u2, x2);
          if (a == b) continue;
          bool shared = false;
          for (const auto& ma : model.incidence(a))
            for (const auto& mb : model.incidence(b)) shared = shared || ma.basis == mb.basis;
          if (shared) ++count;
        }
  return count;
}

/// Local deterministic strategy: one outcome per setting for each party.
struct DeterministicStrategy {
  std::array<int, kNumSettings> alice{};
  std::array<int, kNumSettings> bob{};
  friend bool operator==(const DeterministicStrategy&, const DeterministicStrategy&) = default;
};

inline int evaluate_strategy(const BellFunctional& f, const DeterministicStrategy& s) {
  int value = 0;
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int u2 = 1; u2 <= kNumSettings; ++u2)
      if (f.contains({u1, u2}, {s.alice[static_cast<std::size_t>(u1 - 1)], s.bob[static_cast<std::size_t>(u2 - 1)]}))
        ++value;
  return value;
}

struct ClassicalMinimum {
  int value = 0;
  DeterministicStrategy witness;
};

/// Exact minimum of the functional over local deterministic strategies.
/// Enumerates all 4^9 Alice assignments in lexicographic order; Bob answers
/// each with a per-setting best response (smallest outcome on ties), so the
/// returned witness is the lexicographically smallest minimizer.
inline ClassicalMinimum classical_minimum(const BellFunctional& f) {
  // hits[u2][u1][x1] = bitmask over x2 of S_B membership
  std::array<std::array<std::array<std::uint8_t, kNumOutcomes>, kNumSettings>, kNumSettings> hits{};
  for (int u1 = 0; u1 < kNumSettings; ++u1)
    for (int u2 = 0; u2 < kNumSettings; ++u2)
      for (int x1 = 0; x1 < kNumOutcomes; ++x1)
        for (int x2 = 0; x2 < kNumOutcomes; ++x2)
          if (f.contains({u1 + 1, u2 + 1}, {x1 + 1, x2 + 1}))
            hits[static_cast<std::size_t>(u2)][static_cast<std::size_t>(u1)][static_cast<std::size_t>(x1)] |=
                static_cast<std::uint8_t>(1u << x2);

  ClassicalMinimum best;
  best.value = kNumSettingPairs + 1;
  constexpr std::uint32_t kAssignments = 1u << (2 * kNumSettings);  // 4^9
  std::array<int, kNumSettings> alice{};
  for (std::uint32_t code = 0; code < kAssignments; ++code) {
    // setting 1 is the most significant digit so code order is lexicographic
    for (int u = 0; u < kNumSettings; ++u)
      alice[static_cast<std::size_t>(u)] = static_cast<int>((code >> (2 * (kNumSettings - 1 - u))) & 3u);
    int total = 0;
    std::array<int, kNumSettings> bob{};
    for (int u2 = 0; u2 < kNumSettings && total < best.value; ++u2) {
      std::array<int, kNumOutcomes> cost{};
      for (int u1 = 0; u1 < kNumSettings; ++u1) {
        const std::uint8_t mask =
            hits[static_cast<std::size_t>(u2)][static_cast<std::size_t>(u1)][static_cast<std::size_t>(alice[static_cast<std::size_t>(u1)])];
        for (int x2 = 0; x2 < kNumOutcomes; ++x2) cost[static_cast<std::size_t>(x2)] += (mask >> x2) & 1;
      }
      int arg = 0;
      for (int x2 = 1; x2 < kNumOutcomes; ++x2)
        if (cost[static_cast<std::size_t>(x2)] < cost[static_cast<std::size_t>(arg)]) arg = x2;
      bob[static_cast<std::size_t>(u2)] = arg;
      total += cost[static_cast<std::size_t>(arg)];
    }
    if (total < best.value) {
      best.value = total;
      for (std::size_t u = 0; u < kNumSettings; ++u) {
        best.witness.alice[u] = alice[u] + 1;
        best.witness.bob[u] = bob[u] + 1;
      }
    }
  }
  return best;
}

/// Number of {0,1} colorings with exactly one 1 per basis and no two
/// orthogonal vectors both colored 1. Basis-wise backtracking.
inline std::uint64_t ks_coloring_count(const KSModel& model) {
  const int n = model.num_vectors();
  std::vector<int> color(static_cast<std::size_t>(n) + 1, -1);  // -1 unset
  std::uint64_t count = 0;

  auto consistent_one = [&](int id) {
    for (int other = 1; other <= n; ++other)
      if (other != id && color[static_cast<std::size_t>(other)] == 1 && model.orthogonal(id, other)) return false;
    return true;
  };

  auto recurse = [&](auto&& self, int basis) -> void {
    if (basis > model.num_bases()) {
      // Vectors outside every basis are free to be 0 or 1 subject to orthogonality;
      // count them by brute force.
      std::vector<int> free_ids;
      for (int id = 1; id <= n; ++id)
        if (color[static_cast<std::size_t>(id)] == -1) free_ids.push_back(id);
      if (free_ids.empty()) {
        ++count;
        return;
      }
      const std::size_t k = free_ids.size();
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
        bool ok = true;
        for (std::size_t i = 0; i < k && ok; ++i) {
          if (!((mask >> i) & 1u)) continue;
          ok = consistent_one(free_ids[i]);
          for (std::size_t j = i + 1; j < k && ok; ++j)
            if (((mask >> j) & 1u) && model.orthogonal(free_ids[i], free_ids[j])) ok = false;
        }
        if (ok) ++count;
      }
      return;
    }
    const auto& slots = model.bases()[static_cast<std::size_t>(basis - 1)];
    int ones = 0;
    for (int id : slots) ones += color[static_cast<std::size_t>(id)] == 1;
    if (ones > 1) return;
    if (ones == 1) {
      std::vector<int> assigned;
      for (int id : slots)
        if (color[static_cast<std::size_t>(id)] == -1) {
          color[static_cast<std::size_t>(id)] = 0;
          assigned.push_back(id);
        }
      self(self, basis + 1);
      for (int id : assigned) color[static_cast<std::size_t>(id)] = -1;
      return;
    }
    for (int chosen : slots) {
      if (color[static_cast<std::size_t>(chosen)] != -1) continue;
      if (!consistent_one(chosen)) continue;
      std::vector<int> assigned;
      color[static_cast<std::size_t>(chosen)] = 1;
      assigned.push_back(chosen);
      for (int id : slots)
        if (color[static_cast<std::size_t>(id)] == -1) {
          color[static_cast<std::size_t>(id)] = 0;
          assigned.push_back(id);
        }
      self(self, basis + 1);
      for (int id : assigned) color[static_cast<std::size_t>(id)] = -1;
    }
  };
  recurse(recurse, 1);
  return count;
}

/// Brute-force count over all 2^n assignments; the independent oracle for
/// ks_coloring_count on models of up to 30 vectors.
inline std::uint64_t ks_coloring_count_exhaustive(const KSModel& model) {
  const int n = model.num_vectors();
  if (n > 30) throw std::invalid_argument("exhaustive coloring limited to 30 vectors");
  std::vector<std::uint32_t> basis_masks;
  for (const auto& b : model.bases()) {
    std::uint32_t m = 0;
    for (int id : b) m |= 1u << (id - 1);
    basis_masks.push_back(m);
  }
  std::vector<std::uint32_t> orth_masks(static_cast<std::size_t>(n), 0);
  for (int a = 1; a <= n; ++a)
    for (int b = 1; b <= n; ++b)
      if (a != b && model.orthogonal(a, b)) orth_masks[static_cast<std::size_t>(a - 1)] |= 1u << (b - 1);
  std::uint64_t count = 0;
  for (std::uint64_t assignment = 0; assignment < (std::uint64_t{1} << n); ++assignment) {
    const auto bits = static_cast<std::uint32_t>(assignment);
    bool ok = true;
    for (auto m : basis_masks)
      if (__builtin_popcount(bits & m) != 1) {
        ok = false;
        break;
      }
    for (int a = 0; a < n && ok; ++a)
      if (((bits >> a) & 1u) && (bits & orth_masks[static_cast<std::size_t>(a)])) ok = false;
    if (ok) ++count;
  }
  return count;
}

}  // namespace svamp
