#pragma once

// Inner-product two-source extraction, selection of the transcript
// substring fed to it, uniformity testing, and the min-entropy accounting
// for sequences of conditional boxes.

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svamp/boxes.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/rational.hpp"

namespace svamp {

using Bits = std::vector<std::uint8_t>;

enum class ExtractorMode { kInnerProduct, kPassthrough };
enum class SelectionRule { kTargetRounds, kAllRounds };

inline std::string to_string(SelectionRule r) { return r == SelectionRule::kTargetRounds ? "target_rounds" : "all_rounds"; }
inline SelectionRule selection_rule_from_string(const std::string& s) {
  if (s == "target_rounds") return SelectionRule::kTargetRounds;
  if (s == "all_rounds") return SelectionRule::kAllRounds;
  throw std::invalid_argument("unknown selection rule: " + s);
}

struct ExtractorConfig {
  ExtractorMode mode = ExtractorMode::kInnerProduct;
  std::size_t m = 1;  // output bits
  std::size_t L = 0;  // block length; 0 means min(|x|, |t|)
  SelectionRule rule = SelectionRule::kTargetRounds;
};

/// Copies `in` into exactly L bits, truncating or zero-padding.
inline Bits fit_length(const Bits& in, std::size_t L) {
  Bits out(L, 0);
  for (std::size_t i = 0; i < L && i < in.size(); ++i) out[i] = in[i];
  return out;
}

/// Output bit j = <x, t shifted cyclically left by j> mod 2, j = 0..m-1.
/// Passthrough mode returns the first m bits of x.
inline Bits extract(const Bits& x, const Bits& t, const ExtractorConfig& cfg) {
  const std::size_t L = cfg.L ? cfg.L : std::min(x.size(), t.size());
  if (cfg.m > L) throw std::invalid_argument("extract: m exceeds block length");
  const Bits xs = fit_length(x, L);
  Bits out(cfg.m, 0);
  if (cfg.mode == ExtractorMode::kPassthrough) {
    for (std::size_t j = 0; j < cfg.m; ++j) out[j] = xs[j];
    return out;
  }
  const Bits ts = fit_length(t, L);
  for (std::size_t j = 0; j < cfg.m; ++j) {
    unsigned acc = 0;
    for (std::size_t i = 0; i < L; ++i) acc ^= xs[i] & ts[(i + j) % L];
    out[j] = static_cast<std::uint8_t>(acc);
  }
  return out;
}

inline Bits extract(const Bits& x, const Bits& t, std::size_t m) {
  ExtractorConfig cfg;
  cfg.m = m;
  return extract(x, t, cfg);
}

/// rate(X) + rate(T) > 1 + (2 log2(1/xi) + m) / L.
struct RateCondition {
  double lhs = 0.0;
  double rhs = 0.0;
  bool met = false;
};

inline RateCondition rate_condition(double rate_x, double rate_t, std::size_t m, std::size_t L, double xi) {
  if (L == 0 || !(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("rate_condition: need L > 0 and xi in (0,1)");
  RateCondition c;
  c.lhs = rate_x + rate_t;
  c.rhs = 1.0 + (2.0 * std::log2(1.0 / xi) + static_cast<double>(m)) / static_cast<double>(L);
  c.met = c.lhs > c.rhs;
  return c;
}

/// Min-entropy rate (bits per bit) of t from an eps-SV source: -log2(1/2 + eps).
inline double sv_min_entropy_rate(double epsilon) { return -std::log2(0.5 + epsilon); }

/// Four bits per round: x1 - 1 then x2 - 1, two bits each, MSB first.
inline void append_outcome_bits(OutcomePair x, Bits& out) {
  const unsigned a = static_cast<unsigned>(x.alice - 1);
  const unsigned b = static_cast<unsigned>(x.bob - 1);
  out.push_back(static_cast<std::uint8_t>((a >> 1) & 1u));
  out.push_back(static_cast<std::uint8_t>(a & 1u));
  out.push_back(static_cast<std::uint8_t>((b >> 1) & 1u));
  out.push_back(static_cast<std::uint8_t>(b & 1u));
}

struct SourceBits {
  Bits bits;
  std::size_t rounds_selected = 0;
  /// Honest-device min-entropy per bit: the ideal box's largest entry at u*
  /// is 1/4, so 2 bits per 4-bit round.
  double honest_rate = 0.0;
  SelectionRule rule = SelectionRule::kTargetRounds;
};

inline SourceBits transcript_to_source(const std::vector<Round>& rounds, bool accepted, SelectionRule rule,
                                       SettingPair target = kTargetSetting) {
  if (!accepted) throw std::invalid_argument("transcript_to_source: run was not accepted");
  SourceBits s;
  s.rule = rule;
  for (const auto& r : rounds) {
    if (rule == SelectionRule::kTargetRounds && r.u != target) continue;
    append_outcome_bits(r.x, s.bits);
    ++s.rounds_selected;
  }
  if (s.rounds_selected == 0) throw std::invalid_argument("transcript_to_source: no rounds selected");
  s.honest_rate = rule == SelectionRule::kTargetRounds ? 0.5 : 0.0;
  return s;
}

struct UniformityReport {
  std::size_t samples = 0;
  std::size_t m = 0;
  std::vector<double> bias;  // empirical P(bit j = 1) - 1/2
  double chi_squared = 0.0;
  double p_value = 1.0;
};

/// Per-bit bias and a chi-squared test over the 2^m output cells (m <= 8).
inline UniformityReport uniformity_test(const std::vector<Bits>& outputs) {
  constexpr std::size_t kMinSamples = 1000;
  if (outputs.size() < kMinSamples) throw std::invalid_argument("uniformity_test: need at least 1000 samples");
  const std::size_t m = outputs.front().size();
  if (m == 0 || m > 8) throw std::invalid_argument("uniformity_test: output length must be in [1, 8]");
  UniformityReport r;
  r.samples = outputs.size();
  r.m = m;
  std::vector<std::size_t> ones(m, 0);
  std::vector<std::size_t> cells(std::size_t{1} << m, 0);
  for (const auto& o : outputs) {
    if (o.size() != m) throw std::invalid_argument("uniformity_test: outputs differ in length");
    std::size_t cell = 0;
    for (std::size_t j = 0; j < m; ++j) {
      ones[j] += o[j];
      cell = (cell << 1) | o[j];
    }
    ++cells[cell];
  }
  const double n = static_cast<double>(r.samples);
  for (std::size_t j = 0; j < m; ++j) r.bias.push_back(static_cast<double>(ones[j]) / n - 0.5);
  const double expected = n / static_cast<double>(cells.size());
  for (std::size_t c : cells) {
    const double d = static_cast<double>(c) - expected;
    r.chi_squared += d * d / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(cells.size() - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.chi_squared));
  return r;
}

// ---------------------------------------------------------------------------
// Min-entropy accounting

inline double sequence_bound(std::size_t k_size, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("sequence_bound: gamma must be in (0,1)");
  return std::pow(gamma, static_cast<double>(k_size));
}

inline Rational sequence_bound_exact(std::size_t k_size, const Rational& gamma) {
  if (sgn(gamma) <= 0 || gamma >= 1) throw std::invalid_argument("sequence_bound: gamma must be in (0,1)");
  return rational_pow(gamma, static_cast<unsigned>(k_size));
}

/// Conditional outcome distribution of round `round` (0-based) given the
/// earlier outcomes. All distributions share one alphabet size.
using ConditionalBox = std::function<std::vector<Rational>(std::size_t round, const std::vector<int>& past)>;

struct SequenceBound {
  Rational max_sequence_probability;
  Rational bound;             // gamma^|K|
  bool premise_holds = true;  // every conditional at a K position has max <= gamma
  bool holds = false;         // premise_holds and max_sequence_probability <= bound
};

/// Exhaustive evaluation of max over outcome sequences of the product of
/// conditionals, for n <= 8 rounds.
inline SequenceBound verify_sequence_bound(std::size_t n, std::size_t alphabet, const ConditionalBox& box,
                                   const std::vector<std::size_t>& positions, const Rational& gamma) {
  if (n > 8) throw std::invalid_argument("verify_sequence_bound: n must be at most 8");
  if (alphabet == 0) throw std::invalid_argument("verify_sequence_bound: empty alphabet");
  std::vector<bool> in_k(n, false);
  for (std::size_t p : positions) {
    if (p >= n) throw std::invalid_argument("verify_sequence_bound: position out of range");
    in_k[p] = true;
  }
  SequenceBound out;
  out.bound = sequence_bound_exact(positions.size(), gamma);
  std::vector<int> past;
  std::function<Rational(std::size_t)> best = [&](std::size_t round) -> Rational {
    if (round == n) return Rational(1);
    const auto dist = box(round, past);
    if (dist.size() != alphabet) throw std::invalid_argument("verify_sequence_bound: distribution size mismatch");
    Rational total = 0;
    Rational top = 0;
    for (const auto& p : dist) {
      if (sgn(p) < 0) throw std::invalid_argument("verify_sequence_bound: negative probability");
      total += p;
      if (p > top) top = p;
    }
    if (total != 1) throw std::invalid_argument("verify_sequence_bound: conditional not normalized");
    if (in_k[round] && top > gamma) out.premise_holds = false;
    Rational result = 0;
    for (std::size_t a = 0; a < alphabet; ++a) {
      if (sgn(dist[a]) == 0) continue;
      past.push_back(static_cast<int>(a));
      const Rational v = dist[a] * best(round + 1);
      past.pop_back();
      if (v > result) result = v;
    }
    return result;
  };
  out.max_sequence_probability = best(0);
  out.holds = out.premise_holds && out.max_sequence_probability <= out.bound;
  return out;
}

/// Distribution with largest entry exactly gamma: (gamma, gamma, ..., rest, 0, ...).
inline std::vector<Rational> capped_distribution(std::size_t alphabet, const Rational& gamma) {
  if (gamma * static_cast<long>(alphabet) < 1) throw std::invalid_argument("capped_distribution: alphabet too small");
  std::vector<Rational> d(alphabet, Rational(0));
  Rational remaining = 1;
  for (auto& p : d) {
    p = remaining < gamma ? remaining : gamma;
    remaining -= p;
  }
  return d;
}

/// Product box: at positions in K the conditional is capped_distribution,
/// elsewhere a point mass on outcome 0.
inline ConditionalBox product_box(std::size_t n, std::size_t alphabet, const std::vector<std::size_t>& positions,
                                  const Rational& gamma) {
  std::vector<bool> in_k(n, false);
  for (std::size_t p : positions) in_k.at(p) = true;
  const auto capped = capped_distribution(alphabet, gamma);
  return [=](std::size_t round, const std::vector<int>&) {
    if (in_k[round]) return capped;
    std::vector<Rational> d(alphabet, Rational(0));
    d[0] = 1;
    return d;
  };
}

}  // namespace svamp
