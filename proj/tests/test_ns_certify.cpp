#include <gtest/gtest.h>

#include "svamp/boxes.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/ns_certify.hpp"

namespace svamp {
namespace {

class CertifyTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new KSModel(build_ks_model());
    f_ = new BellFunctional(build_bell_functional(*model_));
  }
  static void TearDownTestSuite() {
    delete f_;
    delete model_;
  }
  static KSModel* model_;
  static BellFunctional* f_;
};

KSModel* CertifyTest::model_ = nullptr;
BellFunctional* CertifyTest::f_ = nullptr;

TEST_F(CertifyTest, ProblemShape) {
  const auto p = build_lp(*f_, Rational(0));
  EXPECT_EQ(p.num_vars, 1296u);
  EXPECT_EQ(p.equalities.size(), 657u);
  EXPECT_EQ(p.bell_cap.coeffs.size(), 504u);
  for (const auto& row : p.equalities)
    for (const auto& [var, c] : row.coeffs) EXPECT_TRUE(c == 1 || c == -1);
  EXPECT_EQ(detail::independent_equality_rows(p).size(), 513u);
  EXPECT_THROW(build_lp(*f_, Rational(-1)), std::invalid_argument);
}

TEST_F(CertifyTest, IdealBoxIsFeasibleAtZero) {
  const auto p = build_lp(*f_, Rational(0));
  const auto ideal = ideal_quantum_box_exact(*model_);
  EXPECT_TRUE(detail::exact_primal_feasible(p, ideal.table()));
}

// Reference optima computed with an independent LP solver (HiGHS through
// scipy.optimize.linprog) on the same constraint system and rationalized.
struct GridPoint {
  Rational delta_tilde;
  Rational optimum;
};

TEST_F(CertifyTest, ExactOptimaAndCertificates) {
  const std::vector<GridPoint> grid{{Rational(0), Rational(3, 4)},
                                    {Rational(1, 20), Rational(91, 120)},
                                    {Rational(1, 2), Rational(5, 6)},
                                    {Rational(3, 2), Rational(17, 18)},
                                    {Rational(2), Rational(1)}};
  for (const auto& g : grid) {
    const auto p = build_lp(*f_, g.delta_tilde);
    const auto sol = solve_lp(p, SolveMode::kExact);
    ASSERT_TRUE(sol.exact_optimum.has_value());
    EXPECT_EQ(*sol.exact_optimum, g.optimum) << "delta_tilde " << g.delta_tilde;
    EXPECT_TRUE(verify_certificate(p, sol.dual));
    EXPECT_EQ(sol.dual.bound, g.optimum);
    EXPECT_LE(g.optimum, target_bound_exact(g.delta_tilde));
    ASSERT_TRUE(sol.exact_primal.has_value());
    EXPECT_TRUE(is_valid_exact(*sol.exact_primal));
    EXPECT_LE(bell_sum(*sol.exact_primal, *f_), g.delta_tilde);
  }
}

TEST_F(CertifyTest, PerturbedOrZeroCertificatesFail) {
  const auto p = build_lp(*f_, Rational(0));
  const auto sol = solve_lp(p);
  ASSERT_TRUE(verify_certificate(p, sol.dual));
  auto zero = sol.dual;
  for (auto& y : zero.equality_multipliers) y = 0;
  for (auto& l : zero.positivity_multipliers) l = 0;
  zero.bell_multiplier = 0;
  EXPECT_FALSE(verify_certificate(p, zero));
  std::size_t nonzero = 0;
  while (sgn(sol.dual.equality_multipliers[nonzero]) == 0) ++nonzero;
  auto bumped = sol.dual;
  bumped.equality_multipliers[nonzero] += Rational(1, 1000);
  EXPECT_FALSE(verify_certificate(p, bumped));
  auto tighter = sol.dual;
  tighter.bound -= Rational(1, 1000000);
  EXPECT_FALSE(verify_certificate(p, tighter));
  EXPECT_FALSE(verify_certificate(build_lp(*f_, Rational(1, 10)), sol.dual));
}

TEST_F(CertifyTest, ZeroBellPrimalIsAnAttackBox) {
  const auto p = build_lp(*f_, Rational(0));
  const auto sol = solve_lp(p);
  const auto& b = *sol.exact_primal;
  EXPECT_EQ(bell_sum(b, *f_), 0);
  EXPECT_EQ(b.at(kTargetSetting, kTargetOutcome), Rational(3, 4));
  EXPECT_TRUE(validate_behavior(sol.primal, 1e-12).ok);
}

TEST_F(CertifyTest, MinimizingTheTargetReachesZero) {
  const auto p = build_lp(*f_, Rational(0), {kTargetOutcome, kTargetSetting}, ObjectiveSense::kMinimize);
  const auto sol = solve_lp(p);
  EXPECT_EQ(*sol.exact_optimum, 0);
  EXPECT_TRUE(verify_certificate(p, sol.dual));
  EXPECT_EQ(sol.dual.bound, 0);
}

TEST_F(CertifyTest, FloatGridIsMonotoneAndBelowTheTargetBound) {
  double previous = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double dt = 0.05 * k;
    const auto sol = solve_lp(build_lp(*f_, dt), SolveMode::kFloat);
    EXPECT_GE(sol.optimum, previous - 1e-9);
    EXPECT_LE(sol.optimum, (3 + 2 * dt) / 4 + 1e-9);
    previous = sol.optimum;
  }
}

TEST(RandomnessBound, Examples) {
  EXPECT_DOUBLE_EQ(randomness_bound(0.0, 0.0), 0.75);
  EXPECT_NEAR(randomness_bound(0.05 * std::pow(0.5, 8), 0.0), 0.775, 1e-15);
  const double eps = 0.1;
  const double edge = std::pow(0.5 - eps, 8) / 2;
  EXPECT_NEAR(randomness_bound(edge, eps), 1.0, 1e-15);
  EXPECT_LT(randomness_bound(edge * 0.99, eps), 1.0);
  EXPECT_DOUBLE_EQ(randomness_bound(1.0, eps), 1.0);
  EXPECT_THROW(randomness_bound(0.1, 0.5), std::invalid_argument);
  EXPECT_THROW(randomness_bound(-0.1, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace svamp
