#pragma once

// The fixed grid of empirical concentration checks behind `verify-bounds`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "svamp/bounds.hpp"
#include "svamp/sv_source.hpp"

namespace svamp {

struct BoundCheckRow {
  std::string check;
  std::string generator;
  std::size_t n = 0;
  double parameter = 0.0;  // s for Azuma rows, gamma for Chernoff rows, delta for fuzz rows
  std::size_t trials = 0;
  double empirical = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = false;
};

namespace detail {

inline BoundCheckRow row_from(std::string check, std::string generator, std::size_t n, double parameter,
                              const TailCheck& c) {
  return {std::move(check), std::move(generator), n, parameter, c.trials, c.frequency, c.bound, c.slack, c.pass};
}

/// X_i = [u_i != u*] for an SV settings stream under the target-avoiding adversary.
inline IndicatorGenerator sv_avoid_indicators(double epsilon) {
  return [epsilon](std::size_t n, Rng& rng) {
    SourceSpec spec;
    spec.epsilon = epsilon;
    spec.strategy = StrategyKind::kAvoidTarget;
    SVSource src(spec, rng.next());
    std::vector<std::uint8_t> x(n);
    for (auto& v : x) v = src.next_setting() != kTargetSetting;
    return x;
  };
}

}  // namespace detail

/// Azuma and Chernoff tails at n in {100, 1000, 2000}, plus fuzzed
/// linear-fraction instances. Every row is seeded from `seed`.
inline std::vector<BoundCheckRow> run_bound_checks(std::size_t trials, std::uint64_t seed) {
  std::vector<BoundCheckRow> rows;
  std::uint64_t stream = 0;
  const std::vector<std::size_t> ns{100, 1000, 2000};
  for (std::size_t n : ns) {
    // s chosen so that the bound sits well below 1 at every n.
    const double s = n == 100 ? 0.2 : (n == 1000 ? 0.1 : 0.07);
    rows.push_back(detail::row_from("azuma", "bernoulli(0.5)", n, s,
                                    azuma_empirical(bernoulli_trace(0.5), n, s, trials, derive_seed(seed, stream++))));
    rows.push_back(detail::row_from("azuma", "markov(0.5,0.2,0.9)", n, s,
                                    azuma_empirical(markov_trace(0.5, 0.2, 0.9), n, s, trials,
                                                    derive_seed(seed, stream++))));
  }
  IndicatorGenerator iid = [](std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> x(n);
    for (auto& v : x) v = rng.bernoulli(0.3);
    return x;
  };
  const double eps = 0.1;
  const double zeta = sv_zeta(eps);
  for (std::size_t n : ns) {
    rows.push_back(detail::row_from("chernoff", "bernoulli(0.3)", n, 0.35,
                                    chernoff_empirical(iid, n, 0.35, 0.3, trials, derive_seed(seed, stream++))));
    for (double gamma : {zeta + (1.0 - zeta) / 2.0, 1.0})
      rows.push_back(detail::row_from("chernoff", "sv_avoid_target(eps=0.1)", n, gamma,
                                      chernoff_empirical(detail::sv_avoid_indicators(eps), n, gamma, zeta, trials,
                                                         derive_seed(seed, stream++))));
  }
  // Linear fraction: throws from inside on a violated postcondition, which
  // is recorded as a failed row.
  Rng rng(derive_seed(seed, stream++));
  std::size_t ok = 0;
  const std::size_t instances = 10000;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t n = 1 + rng.below(200);
    const double delta = 1e-4 + 0.5 * rng.uniform();
    std::vector<double> v(n);
    double sum = 0.0;
    for (auto& x : v) {
      x = rng.uniform() < 0.2 ? rng.uniform() : 0.0;
      sum += x;
    }
    if (sum > 0.0) {
      const double scale = delta * static_cast<double>(n) / sum * rng.uniform();
      for (auto& x : v) x = std::min(1.0, x * scale);
    }
    try {
      linear_fraction(v, delta);
      ++ok;
    } catch (const std::logic_error&) {
    }
  }
  BoundCheckRow lf;
  lf.check = "linear_fraction";
  lf.generator = "fuzz";
  lf.trials = instances;
  lf.empirical = static_cast<double>(ok) / static_cast<double>(instances);
  lf.bound = 1.0;
  lf.pass = ok == instances;
  rows.push_back(lf);
  return rows;
}

}  // namespace svamp
