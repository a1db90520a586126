#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>

#include "svamp/ks_bell.hpp"

namespace svamp {
namespace {

TEST(KSModel, HasEighteenVectorsInNineBases) {
  const auto m = build_ks_model();
  EXPECT_EQ(m.num_vectors(), 18);
  EXPECT_EQ(m.num_bases(), 9);
  EXPECT_NO_THROW(check_ks_invariants(m));
}

TEST(KSModel, EveryVectorLiesInExactlyTwoBases) {
  const auto m = build_ks_model();
  for (int id = 1; id <= m.num_vectors(); ++id) EXPECT_EQ(m.incidence(id).size(), 2u) << "vector " << id;
}

TEST(KSModel, BasesAreOrthogonalIntegerFrames) {
  const auto m = build_ks_model();
  for (const auto& b : m.bases()) {
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const auto& a = m.vector(b[static_cast<std::size_t>(i)]);
        const auto& c = m.vector(b[static_cast<std::size_t>(j)]);
        long dot = 0;
        for (int k = 0; k < 4; ++k) dot += static_cast<long>(a[static_cast<std::size_t>(k)]) * c[static_cast<std::size_t>(k)];
        EXPECT_EQ(dot, 0);
      }
  }
}

TEST(KSModel, RejectsDanglingVectorIds) {
  std::vector<Vec4> vs{{1, 0, 0, 0}};
  EXPECT_THROW(KSModel(vs, {{1, 2, 3, 4}}), std::invalid_argument);
}

TEST(TableIndex, RowMajorWithBobOutcomeFastest) {
  EXPECT_EQ(table_index({1, 1}, {1, 1}), 0u);
  EXPECT_EQ(table_index({1, 1}, {1, 2}), 1u);
  EXPECT_EQ(table_index({1, 1}, {2, 1}), 4u);
  EXPECT_EQ(table_index({1, 2}, {1, 1}), 16u);
  EXPECT_EQ(table_index({9, 9}, {4, 4}), kTableSize - 1);
  for (std::size_t k = 0; k < kTableSize; ++k) {
    const auto u = setting_from_index(k / kNumOutcomePairs);
    const auto x = outcome_from_index(k % kNumOutcomePairs);
    EXPECT_EQ(table_index(u, x), k);
  }
}

// Independent recount straight from the vector coordinates.
std::size_t orthogonal_tuple_count(const KSModel& m) {
  std::size_t count = 0;
  for (int u1 = 1; u1 <= 9; ++u1)
    for (int u2 = 1; u2 <= 9; ++u2)
      for (int x1 = 1; x1 <= 4; ++x1)
        for (int x2 = 1; x2 <= 4; ++x2) {
          const auto& a = m.vector(m.vector_id(u1, x1));
          const auto& b = m.vector(m.vector_id(u2, x2));
          long dot = 0;
          for (int k = 0; k < 4; ++k) dot += static_cast<long>(a[static_cast<std::size_t>(k)]) * b[static_cast<std::size_t>(k)];
          if (dot == 0 && a != b) ++count;
        }
  return count;
}

TEST(BellFunctional, Has504Entries) {
  const auto m = build_ks_model();
  const auto f = build_bell_functional(m);
  EXPECT_EQ(f.size(), 504u);
  EXPECT_EQ(orthogonal_tuple_count(m), 504u);
}

TEST(BellFunctional, CoBasisReadingGives432) { EXPECT_EQ(co_basis_count(build_ks_model()), 432u); }

TEST(BellFunctional, TuplesAreSortedAndUnique) {
  const auto f = build_bell_functional(build_ks_model());
  std::vector<std::size_t> idx;
  for (const auto& t : f.tuples()) idx.push_back(table_index(t.u, t.x));
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), idx.size());
}

TEST(BellFunctional, TargetIsNotInTheSupport) {
  const auto f = build_bell_functional(build_ks_model());
  EXPECT_FALSE(f.contains(kTargetSetting, kTargetOutcome));
  EXPECT_TRUE(f.is_target(kTargetSetting, kTargetOutcome));
}

TEST(BellFunctional, SameSettingNeverHitsDiagonal) {
  const auto f = build_bell_functional(build_ks_model());
  for (int u = 1; u <= 9; ++u)
    for (int x = 1; x <= 4; ++x) EXPECT_FALSE(f.contains({u, u}, {x, x}));
}

TEST(BellFunctional, FromTuplesRejectsOutOfRange) {
  EXPECT_THROW(BellFunctional::from_tuples({{{5, 1}, {1, 1}}}), std::invalid_argument);
}

// Enumerates Bob's assignments and best-responds with Alice: the transpose
// of the library's search order.
int classical_minimum_bob_outer(const BellFunctional& f) {
  int best = 1 << 30;
  std::array<int, 9> bob{};
  for (std::uint32_t code = 0; code < (1u << 18); ++code) {
    for (int s = 0; s < 9; ++s) bob[static_cast<std::size_t>(s)] = static_cast<int>((code >> (2 * s)) & 3u) + 1;
    int total = 0;
    for (int u1 = 1; u1 <= 9 && total < best; ++u1) {
      int row_best = 1 << 30;
      for (int x1 = 1; x1 <= 4; ++x1) {
        int hits = 0;
        for (int u2 = 1; u2 <= 9; ++u2) hits += f.contains({u1, u2}, {x1, bob[static_cast<std::size_t>(u2 - 1)]});
        row_best = std::min(row_best, hits);
      }
      total += row_best;
    }
    best = std::min(best, total);
  }
  return best;
}

TEST(ClassicalBound, MinimumIsFour) {
  const auto f = build_bell_functional(build_ks_model());
  const auto r = classical_minimum(f);
  EXPECT_EQ(r.value, 4);
  EXPECT_EQ(evaluate_strategy(f, r.witness), 4);
  EXPECT_EQ(classical_minimum_bob_outer(f), 4);
}

TEST(ClassicalBound, DiagonalStrategyCounts) {
  const auto f = build_bell_functional(build_ks_model());
  DeterministicStrategy s;
  s.alice.fill(1);
  s.bob.fill(1);
  int expected = 0;
  for (int u1 = 1; u1 <= 9; ++u1)
    for (int u2 = 1; u2 <= 9; ++u2) expected += f.contains({u1, u2}, {1, 1});
  EXPECT_EQ(evaluate_strategy(f, s), expected);
}

TEST(KSColoring, NoValidColoringExists) {
  const auto m = build_ks_model();
  EXPECT_EQ(ks_coloring_count(m), 0u);
  EXPECT_EQ(ks_coloring_count_exhaustive(m), 0u);
}

TEST(KSColoring, OneBasisAloneIsColorable) {
  const auto full = build_ks_model();
  const auto& b = full.bases()[0];
  std::vector<Vec4> vs;
  for (int id : b) vs.push_back(full.vector(id));
  const KSModel single(vs, {{1, 2, 3, 4}});
  EXPECT_EQ(ks_coloring_count_exhaustive(single), 4u);
}

}  // namespace
}  // namespace svamp
