#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "svamp/bounds.hpp"
#include "svamp/sv_source.hpp"

namespace svamp {
namespace {

TEST(Azuma, ClosedForm) {
  EXPECT_NEAR(azuma_bound(100, 0.2), 2 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(azuma_bound(100, 0.2), 0.27067, 1e-5);
  EXPECT_THROW(azuma_bound(10, 0.0), std::invalid_argument);
  EXPECT_NEAR(eps_az_bell(1000, 0.1), 2 * std::exp(-2.5), 1e-15);
  EXPECT_NEAR(eps_az_tomography(1600, 0.1), 2 * std::exp(-1.0), 1e-15);
}

TEST(Azuma, MonotoneInSAndN) {
  EXPECT_GT(azuma_bound(100, 0.1), azuma_bound(100, 0.2));
  EXPECT_GT(azuma_bound(100, 0.1), azuma_bound(1000, 0.1));
}

TEST(Azuma, FairCoinTailIsBelowTheBound) {
  const auto c = azuma_empirical(bernoulli_trace(0.5), 1000, 0.1, 10000, 1);
  EXPECT_NEAR(c.bound, 2 * std::exp(-5.0), 1e-15);
  EXPECT_TRUE(c.pass) << c.frequency;
}

TEST(Azuma, DeterministicTraceNeverDeviates) {
  const auto c = azuma_empirical(deterministic_trace({1, 0, 0, 1, 1}), 500, 1e-6, 100, 2);
  EXPECT_EQ(c.hits, 0u);
}

TEST(Azuma, HistoryDependentTraceIsBelowTheBound) {
  for (std::size_t n : {100u, 1000u, 2000u}) {
    const double s = 3.0 / std::sqrt(static_cast<double>(n));
    const auto c = azuma_empirical(markov_trace(0.5, 0.2, 0.9), n, s, 10000, 3 + n);
    EXPECT_TRUE(c.pass) << n << ": " << c.frequency << " vs " << c.bound;
  }
}

TEST(LinearFraction, Examples) {
  const double delta = 0.01;
  const std::vector<double> flat(100, delta);
  EXPECT_EQ(linear_fraction(flat, delta).size(), 100u);
  std::vector<double> spikes(100, 0.0);
  spikes[3] = 1.0;
  EXPECT_EQ(linear_fraction(spikes, delta).size(), 99u);
  EXPECT_THROW(linear_fraction(std::vector<double>(10, 0.5), delta), std::invalid_argument);
}

TEST(LinearFraction, FuzzedInstances) {
  Rng rng(9);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    const double delta = 1e-4 + 0.5 * rng.uniform();
    std::vector<double> v(n);
    double sum = 0;
    for (auto& x : v) {
      x = rng.uniform() < 0.2 ? rng.uniform() : 0.0;
      sum += x;
    }
    if (sum > 0) {
      const double scale = delta * static_cast<double>(n) / sum * rng.uniform();
      for (auto& x : v) x = std::min(1.0, x * scale);
    }
    const auto idx = linear_fraction(v, delta);
    EXPECT_GE(static_cast<double>(idx.size()), (1 - std::sqrt(delta)) * static_cast<double>(n) - 1e-9);
  }
}

TEST(RandomRounds, FractionExamples) {
  EXPECT_NEAR(random_round_fraction(0.5, 0.1), 1.0 / 6, 1e-15);
  EXPECT_NEAR(random_round_fraction(0.5, 1e-12), 0.25, 1e-12);
}

TEST(RandomRounds, IidDeviceCountsEveryTargetRound) {
  // Constant conditional c >= kappa at u*, nu(u*) c >= mu1 / 2.
  const double nu = 1.0 / 64, c = 0.25, mu1 = 1.9 * nu * c, kappa = 1e-3;
  const std::size_t n = 200000;
  Rng rng(31);
  TomographyTrace t;
  std::size_t target_rounds = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool hit = rng.bernoulli(nu);
    target_rounds += hit;
    t.target_setting.push_back(hit);
    t.setting_prob.push_back(nu);
    t.target_prob.push_back(c);
  }
  const auto r = count_random_rounds(t, mu1, kappa);
  EXPECT_EQ(r.count, target_rounds);
  EXPECT_EQ(r.count_any, n);
  EXPECT_NEAR(r.bound, n * (mu1 - 2 * kappa) / (2 * (1 - kappa)), 1e-6);
  EXPECT_TRUE(r.holds);
}

TEST(RandomRounds, PreconditionAndRange) {
  TomographyTrace t{{1, 0}, {0.5, 0.5}, {0.01, 0.01}};
  EXPECT_THROW(count_random_rounds(t, 0.5, 0.1), std::invalid_argument);
  EXPECT_THROW(count_random_rounds(t, 0.5, 0.3), std::invalid_argument);
  EXPECT_THROW(count_random_rounds({{}, {}, {}}, 0.5, 0.1), std::invalid_argument);
}

TEST(RelativeEntropy, Examples) {
  const double d = relative_entropy(0.5, 0.25);
  EXPECT_NEAR(d, 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3), 1e-15);
  EXPECT_NEAR(d, 0.14384, 1e-5);
  EXPECT_GE(d, 0.125);
  EXPECT_EQ(relative_entropy(0.3, 0.3), 0.0);
  EXPECT_EQ(chernoff_bound(50, 0.3, 0.3), 1.0);
  EXPECT_EQ(relative_entropy(0.5, 0.0), std::numeric_limits<double>::infinity());
  EXPECT_EQ(relative_entropy(0.5, 1.0), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(relative_entropy(1.0, 0.5), std::log(2.0), 1e-15);
  EXPECT_THROW(chernoff_bound(10, 0.2, 0.3), std::invalid_argument);
}

TEST(Chernoff, MonotoneInNAndGap) {
  EXPECT_GT(chernoff_bound(100, 0.6, 0.5), chernoff_bound(200, 0.6, 0.5));
  EXPECT_GT(chernoff_bound(100, 0.6, 0.5), chernoff_bound(100, 0.7, 0.5));
}

TEST(Chernoff, IidBernoulliTail) {
  IndicatorGenerator gen = [](std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> x(n);
    for (auto& v : x) v = rng.bernoulli(0.3);
    return x;
  };
  for (std::size_t n : {100u, 1000u, 2000u}) {
    const auto c = chernoff_empirical(gen, n, 0.35, 0.3, 10000, 40 + n);
    EXPECT_TRUE(c.pass) << n << ": " << c.frequency << " vs " << c.bound;
  }
}

// X_i = [u_i != u*] for an SV stream under the target-avoiding adversary.
IndicatorGenerator sv_avoid_indicators(double eps) {
  return [eps](std::size_t n, Rng& rng) {
    SourceSpec spec;
    spec.epsilon = eps;
    spec.strategy = StrategyKind::kAvoidTarget;
    SVSource src(spec, rng.next());
    std::vector<std::uint8_t> x(n);
    for (auto& v : x) v = src.next_setting() != kTargetSetting;
    return x;
  };
}

TEST(Chernoff, SVSettingsUnderAvoidanceAdversary) {
  const double eps = 0.1;
  const double zeta = sv_zeta(eps);
  for (double gamma : {zeta + (1 - zeta) / 2, 1.0}) {
    const auto c = chernoff_empirical(sv_avoid_indicators(eps), 2000, gamma, zeta, 10000, 99);
    EXPECT_TRUE(c.pass) << gamma << ": " << c.frequency << " vs " << c.bound;
  }
}

}  // namespace
}  // namespace svamp
