#pragma once

// Santha-Vazirani bit sources, the 8-bit -> setting-pair map, and exact
// dynamic programs over adversarial SV strategies.
//
// A strategy never sees randomness: it maps the emitted history to a bias
// direction d in {-1, 0, +1}, and the next bit is 0 with probability
// 1/2 + d*eps. The eps-band therefore holds by construction and can be
// tabulated exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svamp/boxes.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/rational.hpp"
#include "svamp/rng.hpp"

namespace svamp {

inline constexpr int kBitsPerParty = 4;
inline constexpr int kBitsPerRound = 2 * kBitsPerParty;

/// Per-party map from 4-bit values to settings: v -> (v mod 9) + 1.
/// Settings 1..7 have two preimages, 8 and 9 have one.
struct SettingMap {
  std::string name = "mod9-v1";

  static int setting_of(unsigned v) {
    if (v >= 16) throw std::out_of_range("SettingMap: value must be a 4-bit integer");
    return static_cast<int>(v % kNumSettings) + 1;
  }
  static int preimages(int setting) {
    if (setting < 1 || setting > kNumSettings) throw std::out_of_range("SettingMap: invalid setting");
    int count = 0;
    for (unsigned v = 0; v < 16; ++v) count += setting_of(v) == setting ? 1 : 0;
    return count;
  }
  static int preimages(SettingPair u) { return preimages(u.alice) * preimages(u.bob); }

  /// Eight bits b1..b8 packed MSB-first into a byte: Alice reads b1..b4,
  /// Bob reads b5..b8, each as a big-endian 4-bit integer.
  static SettingPair from_byte(std::uint8_t byte) { return {setting_of(byte >> 4), setting_of(byte & 0xFu)}; }
};

inline SettingPair map_bits_to_settings(const std::array<int, kBitsPerRound>& bits) {
  unsigned byte = 0;
  for (int b : bits) {
    if (b != 0 && b != 1) throw std::invalid_argument("map_bits_to_settings: bits must be 0 or 1");
    byte = (byte << 1) | static_cast<unsigned>(b);
  }
  return SettingMap::from_byte(static_cast<std::uint8_t>(byte));
}

/// Setting measure induced by 8 unbiased bits.
inline SettingMeasure uniform_bits_measure(const SettingMap& map = {}) {
  (void)map;
  SettingMeasure m;
  for (unsigned byte = 0; byte < 256; ++byte)
    m.weight[setting_index(SettingMap::from_byte(static_cast<std::uint8_t>(byte)))] += 1.0 / 256.0;
  return m;
}

/// Exact probability of setting u under 8 unbiased bits.
inline Rational uniform_bits_probability(SettingPair u) { return ratio(SettingMap::preimages(u), 256); }

// ---------------------------------------------------------------------------
// Strategies

enum class StrategyKind { kUnbiased, kConstantBias, kAvoidTarget, kBiasTowardPattern };

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kUnbiased: return "unbiased";
    case StrategyKind::kConstantBias: return "constant_bias";
    case StrategyKind::kAvoidTarget: return "avoid_target";
    case StrategyKind::kBiasTowardPattern: return "bias_toward_pattern";
  }
  return "unknown";
}

inline StrategyKind strategy_kind_from_string(const std::string& s) {
  for (auto k : {StrategyKind::kUnbiased, StrategyKind::kConstantBias, StrategyKind::kAvoidTarget,
                 StrategyKind::kBiasTowardPattern})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown source strategy: " + s);
}

class SVStrategy {
 public:
  virtual ~SVStrategy() = default;
  /// Bias direction for the next bit; P(0 | history) = 1/2 + d*eps.
  virtual int direction(const std::vector<std::uint8_t>& history) const = 0;
};

class UnbiasedStrategy final : public SVStrategy {
 public:
  int direction(const std::vector<std::uint8_t>&) const override { return 0; }
};

/// Cycles through a fixed sign sequence; {+1} gives P(0) = 1/2 + eps on every bit.
class ConstantBiasStrategy final : public SVStrategy {
 public:
  explicit ConstantBiasStrategy(std::vector<int> signs) : signs_(std::move(signs)) {
    if (signs_.empty()) throw std::invalid_argument("constant_bias: empty sign sequence");
    for (int s : signs_)
      if (s != 1 && s != -1) throw std::invalid_argument("constant_bias: signs must be +1 or -1");
  }
  int direction(const std::vector<std::uint8_t>& history) const override {
    return signs_[history.size() % signs_.size()];
  }

 private:
  std::vector<int> signs_;
};

/// Within each 8-bit round, pushes probability toward the child subtree with
/// the smaller attainable mass on the target setting pair. This is the
/// minimizer of the per-round target probability.
class AvoidTargetStrategy final : public SVStrategy {
 public:
  AvoidTargetStrategy(const Rational& epsilon, SettingPair target) {
    // Node values over the complete binary tree of one round; heap layout,
    // node 1 is the root and leaves are 256..511.
    std::array<Rational, 512> value;
    for (unsigned byte = 0; byte < 256; ++byte)
      value[256 + byte] = SettingMap::from_byte(static_cast<std::uint8_t>(byte)) == target ? 1 : 0;
    const Rational hi = Rational(1, 2) + epsilon;
    const Rational lo = Rational(1, 2) - epsilon;
    for (unsigned node = 255; node >= 1; --node) {
      const Rational& v0 = value[2 * node];
      const Rational& v1 = value[2 * node + 1];
      value[node] = v0 <= v1 ? hi * v0 + lo * v1 : hi * v1 + lo * v0;
      dir_[node] = v0 < v1 ? 1 : (v1 < v0 ? -1 : 0);
    }
    min_mass_ = value[1];
  }
  int direction(const std::vector<std::uint8_t>& history) const override {
    const std::size_t depth = history.size() % kBitsPerRound;
    unsigned node = 1;
    for (std::size_t i = history.size() - depth; i < history.size(); ++i) node = 2 * node + history[i];
    return dir_[node];
  }
  /// Target probability per round under this strategy.
  const Rational& min_mass() const { return min_mass_; }

 private:
  std::array<int, 256> dir_{};
  Rational min_mass_;
};

/// Biases each bit toward extending the longest suffix of the history that
/// is a proper prefix of the pattern.
class BiasTowardPatternStrategy final : public SVStrategy {
 public:
  explicit BiasTowardPatternStrategy(std::vector<std::uint8_t> pattern) : pattern_(std::move(pattern)) {
    if (pattern_.empty()) throw std::invalid_argument("bias_toward_pattern: empty pattern");
    for (auto b : pattern_)
      if (b > 1) throw std::invalid_argument("bias_toward_pattern: pattern must be bits");
  }
  int direction(const std::vector<std::uint8_t>& history) const override {
    const std::size_t n = history.size();
    for (std::size_t len = std::min(n, pattern_.size() - 1) + 1; len-- > 0;) {
      bool match = true;
      for (std::size_t i = 0; i < len && match; ++i) match = history[n - len + i] == pattern_[i];
      if (match) return pattern_[len] == 0 ? 1 : -1;
    }
    return 0;
  }

 private:
  std::vector<std::uint8_t> pattern_;
};

struct SourceSpec {
  double epsilon = 0.0;
  StrategyKind strategy = StrategyKind::kUnbiased;
  std::vector<int> signs{1};               // kConstantBias
  std::vector<std::uint8_t> pattern{0, 1};  // kBiasTowardPattern
  SettingPair target = kTargetSetting;     // kAvoidTarget
};

inline std::unique_ptr<SVStrategy> make_strategy(const SourceSpec& spec) {
  switch (spec.strategy) {
    case StrategyKind::kUnbiased: return std::make_unique<UnbiasedStrategy>();
    case StrategyKind::kConstantBias: return std::make_unique<ConstantBiasStrategy>(spec.signs);
    case StrategyKind::kAvoidTarget:
      return std::make_unique<AvoidTargetStrategy>(rational_from_double(spec.epsilon), spec.target);
    case StrategyKind::kBiasTowardPattern: return std::make_unique<BiasTowardPatternStrategy>(spec.pattern);
  }
  throw std::invalid_argument("make_strategy: unknown strategy");
}

class SVSource {
 public:
  SVSource(double epsilon, std::unique_ptr<SVStrategy> strategy, std::uint64_t seed)
      : epsilon_(epsilon), strategy_(std::move(strategy)), rng_(seed) {
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("SVSource: epsilon must be in [0, 1/2)");
    if (!strategy_) throw std::invalid_argument("SVSource: null strategy");
  }
  SVSource(const SourceSpec& spec, std::uint64_t seed) : SVSource(spec.epsilon, make_strategy(spec), seed) {}

  int next_bit() {
    const double p0 = 0.5 + strategy_->direction(history_) * epsilon_;
    const int bit = rng_.uniform() < p0 ? 0 : 1;
    history_.push_back(static_cast<std::uint8_t>(bit));
    return bit;
  }

  std::vector<int> next_bits(std::size_t k) {
    if (k == 0) throw std::invalid_argument("next_bits: k must be at least 1");
    std::vector<int> out(k);
    for (auto& b : out) b = next_bit();
    return out;
  }

  /// Eight bits mapped to a setting pair.
  SettingPair next_setting() {
    unsigned byte = 0;
    for (int i = 0; i < kBitsPerRound; ++i) byte = (byte << 1) | static_cast<unsigned>(next_bit());
    return SettingMap::from_byte(static_cast<std::uint8_t>(byte));
  }

  double epsilon() const { return epsilon_; }
  const std::vector<std::uint8_t>& history() const { return history_; }

 private:
  double epsilon_;
  std::unique_ptr<SVStrategy> strategy_;
  Rng rng_;
  std::vector<std::uint8_t> history_;
};

/// P(0 | h) for every history h of length < depth, in order of length then
/// value (MSB first). Entry for history h sits at index 2^|h| - 1 + value(h).
inline std::vector<Rational> conditional_table(const SVStrategy& strategy, const Rational& epsilon, int depth) {
  if (depth < 0 || depth > 20) throw std::invalid_argument("conditional_table: depth must be in [0, 20]");
  std::vector<Rational> table;
  table.reserve((std::size_t{1} << depth) - 1);
  std::vector<std::uint8_t> h;
  for (int len = 0; len < depth; ++len) {
    h.assign(static_cast<std::size_t>(len), 0);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
      for (int i = 0; i < len; ++i) h[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (len - 1 - i)) & 1u);
      table.push_back(Rational(1, 2) + strategy.direction(h) * epsilon);
    }
  }
  return table;
}

/// True iff every tabulated conditional satisfies |P(0|h) - 1/2| <= eps exactly.
inline bool satisfies_sv_band(const std::vector<Rational>& table, const Rational& epsilon) {
  for (const auto& p : table)
    if (abs(p - Rational(1, 2)) > epsilon) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Exact bounds on the induced setting measure

struct MeasureBounds {
  Rational lower;      // (1/2 - eps)^8
  Rational upper;      // preimages(u) * (1/2 + eps)^8
  Rational exact_min;  // min over adaptive SV strategies
  Rational exact_max;  // max over adaptive SV strategies
};

namespace detail {

/// Optimal probability of landing on u after 8 adversarial bits.
inline Rational round_extremum(const Rational& epsilon, SettingPair u, bool maximize) {
  std::array<Rational, 512> value;
  for (unsigned byte = 0; byte < 256; ++byte)
    value[256 + byte] = SettingMap::from_byte(static_cast<std::uint8_t>(byte)) == u ? 1 : 0;
  const Rational hi = Rational(1, 2) + epsilon;
  const Rational lo = Rational(1, 2) - epsilon;
  for (unsigned node = 255; node >= 1; --node) {
    const Rational& a = value[2 * node];
    const Rational& b = value[2 * node + 1];
    const bool a_small = a <= b;
    const Rational& small = a_small ? a : b;
    const Rational& large = a_small ? b : a;
    value[node] = maximize ? hi * large + lo * small : hi * small + lo * large;
  }
  return value[1];
}

}  // namespace detail

inline MeasureBounds setting_measure_bounds(const Rational& epsilon, const SettingMap& map, SettingPair u) {
  (void)map;
  if (sgn(epsilon) < 0 || epsilon >= Rational(1, 2))
    throw std::invalid_argument("setting_measure_bounds: epsilon must be in [0, 1/2)");
  if (!valid_setting(u)) throw std::invalid_argument("setting_measure_bounds: invalid setting");
  MeasureBounds m;
  m.lower = rational_pow(Rational(1, 2) - epsilon, kBitsPerRound);
  m.upper = SettingMap::preimages(u) * rational_pow(Rational(1, 2) + epsilon, kBitsPerRound);
  m.exact_min = detail::round_extremum(epsilon, u, false);
  m.exact_max = detail::round_extremum(epsilon, u, true);
  return m;
}

struct ChernoffOracle {
  Rational exact_max;   // max over strategies of Pr(no round hits u*)
  Rational zeta;        // 1 - (1/2 - eps)^8
  Rational zeta_bound;  // zeta^k
  bool holds = false;   // exact_max <= zeta_bound
};

/// Max over adaptive eps-SV strategies of Pr(u_1 != u*, ..., u_k != u*) by
/// dynamic programming over (round, prefix within round). A round that hits
/// u* contributes 0; otherwise play continues into the next round.
inline ChernoffOracle sv_chernoff_oracle(const Rational& epsilon, const SettingMap& map, int k,
                                         SettingPair target = kTargetSetting) {
  (void)map;
  if (k < 1 || k > 20) throw std::invalid_argument("sv_chernoff_oracle: k must be in [1, 20]");
  if (sgn(epsilon) < 0 || epsilon >= Rational(1, 2))
    throw std::invalid_argument("sv_chernoff_oracle: epsilon must be in [0, 1/2)");
  const Rational hi = Rational(1, 2) + epsilon;
  const Rational lo = Rational(1, 2) - epsilon;

  Rational next_round = 1;  // value with no rounds remaining
  for (int r = 0; r < k; ++r) {
    std::array<Rational, 512> value;
    for (unsigned byte = 0; byte < 256; ++byte)
      value[256 + byte] = SettingMap::from_byte(static_cast<std::uint8_t>(byte)) == target ? Rational(0) : next_round;
    for (unsigned node = 255; node >= 1; --node) {
      const Rational& a = value[2 * node];
      const Rational& b = value[2 * node + 1];
      value[node] = a >= b ? hi * a + lo * b : hi * b + lo * a;
    }
    next_round = value[1];
  }
  ChernoffOracle out;
  out.exact_max = next_round;
  out.zeta = 1 - rational_pow(lo, kBitsPerRound);
  out.zeta_bound = rational_pow(out.zeta, static_cast<unsigned>(k));
  out.holds = out.exact_max <= out.zeta_bound;
  return out;
}

inline double sv_zeta(double epsilon) { return 1.0 - std::pow(0.5 - epsilon, kBitsPerRound); }

}  // namespace svamp
