#pragma once

// Concentration bounds used by the security argument, with white-box
// Monte Carlo checks against simulators whose conditional means are known.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "svamp/rng.hpp"

namespace svamp {

// ---------------------------------------------------------------------------
// Azuma-Hoeffding

/// 2 exp(-n s^2 / 2).
inline double azuma_bound(std::size_t n, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("azuma_bound: s must be positive");
  return 2.0 * std::exp(-static_cast<double>(n) * s * s / 2.0);
}

/// Constant of the Bell-test Azuma step as used in the security proof,
/// 2 exp(-n delta^2 / 4). Half the exponent of azuma_bound(n, delta).
inline double eps_az_bell(std::size_t n, double delta) {
  return 2.0 * std::exp(-static_cast<double>(n) * delta * delta / 4.0);
}

/// Constant of the tomography Azuma step, 2 exp(-n mu1^2 / 16).
inline double eps_az_tomography(std::size_t n, double mu1) {
  return 2.0 * std::exp(-static_cast<double>(n) * mu1 * mu1 / 16.0);
}

/// Indicators B_i with their conditional means given the past.
struct MartingaleTrace {
  std::vector<std::uint8_t> b;
  std::vector<double> mean;

  std::size_t size() const { return b.size(); }
  double empirical_average() const {
    double s = 0.0;
    for (auto v : b) s += v;
    return b.empty() ? 0.0 : s / static_cast<double>(b.size());
  }
  double conditional_average() const {
    double s = 0.0;
    for (double v : mean) s += v;
    return mean.empty() ? 0.0 : s / static_cast<double>(mean.size());
  }
};

/// Result of a one-sided empirical check: frequency <= bound + 3 sigma,
/// sigma the binomial standard error at the bound.
struct TailCheck {
  std::size_t trials = 0;
  std::size_t hits = 0;
  double frequency = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = false;
};

inline TailCheck make_tail_check(std::size_t hits, std::size_t trials, double bound) {
  TailCheck c;
  c.trials = trials;
  c.hits = hits;
  c.frequency = static_cast<double>(hits) / static_cast<double>(trials);
  c.bound = bound;
  const double p = std::clamp(bound, 0.0, 1.0);
  c.slack = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  c.pass = c.frequency <= bound + c.slack;
  return c;
}

using TraceGenerator = std::function<MartingaleTrace(std::size_t n, Rng& rng)>;

/// Fraction of trials with |L_n - Lbar_n| >= s, each trial seeded from
/// derive_seed(master_seed, trial).
inline TailCheck azuma_empirical(const TraceGenerator& generate, std::size_t n, double s, std::size_t trials,
                                 std::uint64_t master_seed) {
  if (trials == 0) throw std::invalid_argument("azuma_empirical: trials must be positive");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(master_seed, t));
    const auto trace = generate(n, rng);
    if (trace.size() != n || trace.mean.size() != n) throw std::logic_error("azuma_empirical: trace length mismatch");
    if (std::abs(trace.empirical_average() - trace.conditional_average()) >= s) ++hits;
  }
  return make_tail_check(hits, trials, azuma_bound(n, s));
}

/// Independent Bernoulli(p) indicators.
inline TraceGenerator bernoulli_trace(double p) {
  return [p](std::size_t n, Rng& rng) {
    MartingaleTrace t;
    t.b.resize(n);
    t.mean.assign(n, p);
    for (auto& v : t.b) v = static_cast<std::uint8_t>(rng.bernoulli(p));
    return t;
  };
}

/// B_i = Bbar_i in {0,1}: no fluctuation at all.
inline TraceGenerator deterministic_trace(std::vector<std::uint8_t> pattern) {
  return [pattern](std::size_t n, Rng&) {
    MartingaleTrace t;
    t.b.resize(n);
    t.mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.b[i] = pattern[i % pattern.size()];
      t.mean[i] = t.b[i];
    }
    return t;
  };
}

/// History-dependent indicators: Bbar_i = p_hi after a 1, p_lo after a 0.
inline TraceGenerator markov_trace(double p_first, double p_lo, double p_hi) {
  return [=](std::size_t n, Rng& rng) {
    MartingaleTrace t;
    t.b.resize(n);
    t.mean.resize(n);
    double p = p_first;
    for (std::size_t i = 0; i < n; ++i) {
      t.mean[i] = p;
      t.b[i] = static_cast<std::uint8_t>(rng.bernoulli(p));
      p = t.b[i] ? p_hi : p_lo;
    }
    return t;
  };
}

// ---------------------------------------------------------------------------
// Linear fraction

/// Indices i with values[i] <= sqrt(delta), given mean(values) <= delta.
/// Throws std::logic_error if the guaranteed size (1 - sqrt(delta)) n is missed.
inline std::vector<std::size_t> linear_fraction(const std::vector<double>& values, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("linear_fraction: delta must be positive");
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("linear_fraction: values must be nonnegative");
    sum += v;
  }
  const double n = static_cast<double>(values.size());
  constexpr double kRelTol = 1e-12;
  if (sum / n > delta * (1.0 + kRelTol)) throw std::invalid_argument("linear_fraction: mean exceeds delta");
  const double root = std::sqrt(delta);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= root) out.push_back(i);
  if (static_cast<double>(out.size()) < (1.0 - root) * n * (1.0 - kRelTol) - kRelTol)
    throw std::logic_error("linear_fraction: postcondition violated");
  return out;
}

// ---------------------------------------------------------------------------
// Conditional count

/// Per round: the setting hit indicator, the source's conditional probability
/// of the target setting, and the device's conditional P(x*|u*, past).
struct TomographyTrace {
  std::vector<std::uint8_t> target_setting;  // 1 iff u_i = u*
  std::vector<double> setting_prob;          // Pr(u_i = u* | past)
  std::vector<double> target_prob;           // q(x* | u*, past)
};

struct RandomRoundCount {
  std::size_t n = 0;
  double s_bar = 0.0;         // (1/n) sum Pr(u_i=u*|past) q_i
  double bound = 0.0;         // n (mu1 - 2 kappa) / (2 (1 - kappa))
  std::size_t count = 0;      // |I_kappa| = #{i : u_i = u*, q_i >= kappa}
  std::size_t count_any = 0;  // #{i : q_i >= kappa}
  bool holds = false;         // count >= bound
};

/// (mu1 - 2 kappa) / (2 (1 - kappa)).
inline double random_round_fraction(double mu1, double kappa) { return (mu1 - 2.0 * kappa) / (2.0 * (1.0 - kappa)); }

/// The implication  s_bar >= mu1/2  =>  #{i : q_i >= kappa} >= bound  is
/// deterministic and checked on every call. The stronger statement for
/// |I_kappa| (which also needs u_i = u*) holds only with high probability
/// and is reported in `holds`.
inline RandomRoundCount count_random_rounds(const TomographyTrace& trace, double mu1, double kappa) {
  const std::size_t n = trace.target_setting.size();
  if (n == 0 || trace.setting_prob.size() != n || trace.target_prob.size() != n)
    throw std::invalid_argument("count_random_rounds: inconsistent trace");
  if (!(kappa > 0.0 && kappa < mu1 / 2.0)) throw std::invalid_argument("count_random_rounds: need 0 < kappa < mu1/2");
  RandomRoundCount r;
  r.n = n;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += trace.setting_prob[i] * trace.target_prob[i];
    if (trace.target_prob[i] >= kappa) {
      ++r.count_any;
      if (trace.target_setting[i]) ++r.count;
    }
  }
  r.s_bar = sum / static_cast<double>(n);
  if (r.s_bar < mu1 / 2.0) throw std::invalid_argument("count_random_rounds: conditional average below mu1/2");
  r.bound = static_cast<double>(n) * random_round_fraction(mu1, kappa);
  if (static_cast<double>(r.count_any) < r.bound * (1.0 - 1e-12))
    throw std::logic_error("count_random_rounds: counting argument violated");
  r.holds = static_cast<double>(r.count) >= r.bound;
  return r;
}

// ---------------------------------------------------------------------------
// Generalized Chernoff

/// D(gamma || zeta) in nats, with 0 log 0 = 0 and +infinity where the
/// support condition fails (gamma > 0 = zeta or gamma < 1 = zeta).
inline double relative_entropy(double gamma, double zeta) {
  if (!(gamma >= 0.0 && gamma <= 1.0 && zeta >= 0.0 && zeta <= 1.0))
    throw std::invalid_argument("relative_entropy: arguments must lie in [0, 1]");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double d = 0.0;
  if (gamma > 0.0) {
    if (zeta == 0.0) return kInf;
    d += gamma * std::log(gamma / zeta);
  }
  if (gamma < 1.0) {
    if (zeta == 1.0) return kInf;
    d += (1.0 - gamma) * std::log((1.0 - gamma) / (1.0 - zeta));
  }
  return std::max(d, 0.0);
}

/// exp(-n D(gamma || zeta)) for 0 <= zeta <= gamma <= 1; also checks
/// Pinsker's D >= 2 (gamma - zeta)^2.
inline double chernoff_bound(std::size_t n, double gamma, double zeta) {
  if (!(zeta >= 0.0 && zeta <= gamma && gamma <= 1.0))
    throw std::invalid_argument("chernoff_bound: need 0 <= zeta <= gamma <= 1");
  const double d = relative_entropy(gamma, zeta);
  if (d < 2.0 * (gamma - zeta) * (gamma - zeta) * (1.0 - 1e-12))
    throw std::logic_error("chernoff_bound: Pinsker inequality violated");
  return std::exp(-static_cast<double>(n) * d);
}

using IndicatorGenerator = std::function<std::vector<std::uint8_t>(std::size_t n, Rng& rng)>;

/// Fraction of trials with sum X_i >= gamma n, against chernoff_bound.
inline TailCheck chernoff_empirical(const IndicatorGenerator& generate, std::size_t n, double gamma, double zeta,
                                    std::size_t trials, std::uint64_t master_seed) {
  if (trials == 0) throw std::invalid_argument("chernoff_empirical: trials must be positive");
  const double threshold = gamma * static_cast<double>(n);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(master_seed, t));
    const auto x = generate(n, rng);
    std::size_t sum = 0;
    for (auto v : x) sum += v;
    if (static_cast<double>(sum) >= threshold) ++hits;
  }
  return make_tail_check(hits, trials, chernoff_bound(n, gamma, zeta));
}

}  // namespace svamp
