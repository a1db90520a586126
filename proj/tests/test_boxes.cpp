#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <memory>

#include "svamp/boxes.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/rng.hpp"

namespace svamp {
namespace {

class BoxesTest : public ::testing::Test {
 protected:
  KSModel model = build_ks_model();
  BellFunctional f = build_bell_functional(model);
};

TEST_F(BoxesTest, IdealBoxIsExactlyValid) {
  const auto exact = ideal_quantum_box_exact(model);
  EXPECT_TRUE(is_valid_exact(exact));
  EXPECT_TRUE(validate_behavior(to_double(exact), 1e-12).ok);
}

TEST_F(BoxesTest, IdealBoxDenominatorsDivide64) {
  const auto exact = ideal_quantum_box_exact(model);
  for (std::size_t k = 0; k < kTableSize; ++k) EXPECT_EQ(64 % exact[k].get_den(), 0) << k;
}

TEST_F(BoxesTest, IdealBoxHasZeroBellSum) {
  const auto exact = ideal_quantum_box_exact(model);
  EXPECT_EQ(bell_sum(exact, f), 0);
  for (const auto& t : f.tuples()) EXPECT_EQ(exact.at(t.u, t.x), 0);
  EXPECT_EQ(bell_value(to_double(exact), f, SettingMeasure::uniform()), 0.0);
}

TEST_F(BoxesTest, IdealBoxTargetEntries) {
  const auto exact = ideal_quantum_box_exact(model);
  EXPECT_EQ(exact.at(kTargetSetting, kTargetOutcome), Rational(1, 16));
  EXPECT_EQ(exact.at({1, 2}, {4, 1}), Rational(1, 4));
}

TEST_F(BoxesTest, IdealBoxMatchesProjectorOverlap) {
  const auto exact = ideal_quantum_box_exact(model);
  for (int u1 = 1; u1 <= 9; ++u1)
    for (int u2 = 1; u2 <= 9; ++u2)
      for (int x1 = 1; x1 <= 4; ++x1)
        for (int x2 = 1; x2 <= 4; ++x2) {
          const auto& a = model.vector(model.vector_id(u1, x1));
          const auto& b = model.vector(model.vector_id(u2, x2));
          long ab = 0, aa = 0, bb = 0;
          for (std::size_t k = 0; k < 4; ++k) {
            ab += static_cast<long>(a[k]) * b[k];
            aa += static_cast<long>(a[k]) * a[k];
            bb += static_cast<long>(b[k]) * b[k];
          }
          EXPECT_EQ(exact.at({u1, u2}, {x1, x2}), ratio(ab * ab, 4 * aa * bb));
        }
}

TEST_F(BoxesTest, DepolarizeEndpointsAndLinearity) {
  const auto ideal = ideal_quantum_box(model);
  EXPECT_EQ(depolarize(ideal, 0.0), ideal);
  const auto noise = depolarize(ideal, 1.0);
  for (std::size_t k = 0; k < kTableSize; ++k) EXPECT_DOUBLE_EQ(noise[k], 1.0 / 16);
  for (double eta : {0.1, 0.37, 0.9}) {
    const auto b = depolarize(ideal, eta);
    EXPECT_TRUE(validate_behavior(b, 1e-12).ok);
    EXPECT_NEAR(bell_value(b, f, SettingMeasure::counting_measure()), 31.5 * eta, 1e-12);
  }
  EXPECT_THROW(depolarize(ideal, -0.1), std::invalid_argument);
  EXPECT_THROW(depolarize(ideal, 1.1), std::invalid_argument);
}

TEST_F(BoxesTest, ValidateReportsSignaling) {
  auto b = uniform_box();
  // Shift Alice's marginal for u = (1, 2) by 0.1 while staying normalized.
  b.at({1, 2}, {1, 1}) += 0.1;
  b.at({1, 2}, {2, 1}) -= 0.1;
  const auto r = validate_behavior(b, 1e-12);
  EXPECT_FALSE(r.ok);
  EXPECT_NEAR(r.signaling_residual, 0.1, 1e-15);
  EXPECT_NEAR(r.normalization_residual, 0.0, 1e-15);
}

TEST_F(BoxesTest, ValidateReportsNormalization) {
  auto b = uniform_box();
  b.at({3, 3}, {1, 1}) -= 0.1;
  const auto r = validate_behavior(b, 1e-12);
  EXPECT_FALSE(r.ok);
  EXPECT_NEAR(r.normalization_residual, 0.1, 1e-15);
}

TEST_F(BoxesTest, BellValueExamples) {
  EXPECT_NEAR(bell_value(uniform_box(), f, SettingMeasure::uniform()), 504.0 / (16 * 81), 1e-15);
  EXPECT_EQ(f.count_for_setting({1, 1}), 12);
  EXPECT_NEAR(bell_value(uniform_box(), f, SettingMeasure::point({1, 1})), 0.75, 1e-15);
  SettingMeasure bad;
  bad.weight.fill(0.5);
  EXPECT_THROW(bell_value(uniform_box(), f, bad), std::invalid_argument);
}

TEST_F(BoxesTest, BellValueIsLinearInTheBehavior) {
  Rng rng(11);
  const auto ideal = ideal_quantum_box(model);
  DeterministicStrategy s;
  for (int i = 0; i < 9; ++i) {
    s.alice[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(4)) + 1;
    s.bob[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(4)) + 1;
  }
  const auto det = deterministic_box(s);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform();
    std::vector<double> t(kTableSize);
    for (std::size_t k = 0; k < kTableSize; ++k) t[k] = a * det[k] + (1 - a) * ideal[k];
    const Behavior mix(t);
    const auto m = SettingMeasure::uniform();
    EXPECT_NEAR(bell_value(mix, f, m), a * bell_value(det, f, m) + (1 - a) * bell_value(ideal, f, m), 1e-14);
  }
}

TEST_F(BoxesTest, DeterministicBoxAlwaysGivesItsOutcome) {
  DeterministicStrategy s;
  s.alice.fill(2);
  s.bob.fill(3);
  const auto b = deterministic_box(s);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_outcome(b, {4, 7}, rng), (OutcomePair{2, 3}));
}

TEST_F(BoxesTest, UniformSamplingPassesChiSquared) {
  const auto b = uniform_box();
  Rng rng(2024);
  std::array<int, 16> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto x = sample_outcome(b, {5, 6}, rng);
    ++counts[static_cast<std::size_t>((x.alice - 1) * 4 + x.bob - 1)];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - draws / 16.0) * (c - draws / 16.0) / (draws / 16.0);
  const boost::math::chi_squared dist(15);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 1e-3);
}

// Regression anchor: frozen outputs of the sampler for a fixed seed.
TEST_F(BoxesTest, FixedSeedSamplingAnchor) {
  const auto ideal = ideal_quantum_box(model);
  Rng rng(20240601);
  std::vector<int> got;
  for (int i = 0; i < 12; ++i) {
    const auto x = sample_outcome(ideal, {1 + i % 9, 1 + (i * 4) % 9}, rng);
    got.push_back(x.alice * 10 + x.bob);
  }
  const std::vector<int> frozen{11, 13, 14, 44, 11, 41, 22, 31, 42, 44, 34, 34};
  EXPECT_EQ(got, frozen);
}

TEST_F(BoxesTest, IidIdealDeviceMatchesTableFrequencies) {
  const auto ideal = ideal_quantum_box(model);
  auto dev = make_iid_device(ideal, 99);
  const int n = 10000;
  std::array<int, 16> counts{};
  for (int i = 0; i < n; ++i) {
    const auto x = dev->respond({1, 2});
    ++counts[static_cast<std::size_t>((x.alice - 1) * 4 + x.bob - 1)];
  }
  for (std::size_t o = 0; o < 16; ++o) {
    const double p = ideal.row({1, 2})[o];
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LE(std::abs(counts[o] - n * p), 5 * sigma + 1e-9) << o;
  }
  EXPECT_EQ(dev->rounds_played(), static_cast<std::size_t>(n));
}

TEST_F(BoxesTest, SwitchAfterZeroIsIidSecond) {
  auto ideal = std::make_shared<const Behavior>(ideal_quantum_box(model));
  auto noise = std::make_shared<const Behavior>(uniform_box());
  auto a = make_device(DeviceSpec::switch_after(0, ideal, noise), 3);
  auto b = make_device(DeviceSpec::iid(noise), 3);
  Rng settings(8);
  for (int i = 0; i < 500; ++i) {
    const SettingPair u{static_cast<int>(settings.below(9)) + 1, static_cast<int>(settings.below(9)) + 1};
    EXPECT_EQ(a->respond(u), b->respond(u));
  }
}

TEST_F(BoxesTest, SwitchToWitnessHalvesItsBellRate) {
  const auto witness = classical_minimum(f).witness;
  auto ideal = std::make_shared<const Behavior>(ideal_quantum_box(model));
  auto det = std::make_shared<const Behavior>(deterministic_box(witness));
  const int n = 20000;
  auto dev = make_device(DeviceSpec::switch_after(n / 2, ideal, det), 17);
  Rng settings(4);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const SettingPair u{static_cast<int>(settings.below(9)) + 1, static_cast<int>(settings.below(9)) + 1};
    hits += f.contains(u, dev->respond(u));
  }
  const double p = 4.0 / 81;  // witness rate under uniform settings
  const double mean = 0.5 * p;
  const double sigma = std::sqrt(n / 2.0 * p * (1 - p)) / n;
  EXPECT_NEAR(static_cast<double>(hits) / n, mean, 5 * sigma);
}

TEST_F(BoxesTest, HistoryTriggerSwitchesAfterPattern) {
  auto ideal = std::make_shared<const Behavior>(ideal_quantum_box(model));
  DeterministicStrategy s;
  s.alice.fill(1);
  s.bob.fill(1);
  auto det = std::make_shared<const Behavior>(deterministic_box(s));
  auto dev = make_device(DeviceSpec::history_trigger({{2, 2}, {3, 3}}, ideal, det), 1);
  dev->respond({3, 3});
  dev->respond({2, 2});
  EXPECT_EQ(&dev->last_behavior(), ideal.get());
  dev->respond({3, 3});
  EXPECT_EQ(&dev->last_behavior(), det.get());
  EXPECT_EQ(dev->respond({5, 5}), (OutcomePair{1, 1}));
}

TEST_F(BoxesTest, ResponsesIgnoreFutureSettings) {
  auto ideal = std::make_shared<const Behavior>(ideal_quantum_box(model));
  auto noise = std::make_shared<const Behavior>(uniform_box());
  const std::vector<SettingPair> trigger{{1, 1}, {1, 2}};
  Rng settings(21);
  std::vector<SettingPair> us;
  for (int i = 0; i < 400; ++i)
    us.push_back({static_cast<int>(settings.below(9)) + 1, static_cast<int>(settings.below(9)) + 1});
  for (std::size_t cut : {0u, 57u, 200u, 399u}) {
    auto mutated = us;
    for (std::size_t i = cut + 1; i < mutated.size(); ++i) mutated[i] = {1 + (mutated[i].bob % 9), mutated[i].alice};
    auto a = make_device(DeviceSpec::history_trigger(trigger, ideal, noise), 77);
    auto b = make_device(DeviceSpec::history_trigger(trigger, ideal, noise), 77);
    for (std::size_t i = 0; i <= cut; ++i) EXPECT_EQ(a->respond(us[i]), b->respond(mutated[i]));
  }
}

TEST_F(BoxesTest, InvalidSpecsAreRejected) {
  auto ideal = std::make_shared<const Behavior>(ideal_quantum_box(model));
  EXPECT_THROW(make_device(DeviceSpec::iid(nullptr), 1), std::invalid_argument);
  EXPECT_THROW(make_device(DeviceSpec::history_trigger({}, ideal, ideal), 1), std::invalid_argument);
  EXPECT_THROW(make_device(DeviceSpec::history_trigger({{0, 1}}, ideal, ideal), 1), std::invalid_argument);
  auto bad = uniform_box();
  bad.at({1, 1}, {1, 1}) += 0.5;
  EXPECT_THROW(make_iid_device(bad, 1), std::invalid_argument);
  auto dev = make_iid_device(*ideal, 1);
  EXPECT_THROW(dev->respond({10, 1}), std::invalid_argument);
}

}  // namespace
}  // namespace svamp
