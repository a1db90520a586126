#pragma once

// Two-party behaviors P(x1,x2|u1,u2), the ideal quantum box, white-noise
// mixing, validation, Bell values, categorical sampling and stateful device
// oracles that respect time-ordered no-signaling.
//
// Device oracles and SV sources never share state, and a device is fully
// constructed (with its own seed) before any source bit is drawn. That is
// how the "devices do not signal to the source" and "box fixed independently
// of the source" assumptions are realized; nothing checks them at runtime.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svamp/ks_bell.hpp"
#include "svamp/rational.hpp"
#include "svamp/rng.hpp"

namespace svamp {

template <class T>
class BasicBehavior {
 public:
  BasicBehavior() : table_(kTableSize, T(0)) {}
  explicit BasicBehavior(std::vector<T> table) : table_(std::move(table)) {
    if (table_.size() != kTableSize) throw std::invalid_argument("behavior table must have 1296 entries");
  }

  const T& at(SettingPair u, OutcomePair x) const { return table_[table_index(u, x)]; }
  T& at(SettingPair u, OutcomePair x) { return table_[table_index(u, x)]; }
  const T& operator[](std::size_t k) const { return table_[k]; }
  T& operator[](std::size_t k) { return table_[k]; }

  const std::vector<T>& table() const { return table_; }
  std::span<const T, kNumOutcomePairs> row(SettingPair u) const {
    return std::span<const T, kNumOutcomePairs>(table_.data() + setting_index(u) * kNumOutcomePairs,
                                                kNumOutcomePairs);
  }

  friend bool operator==(const BasicBehavior&, const BasicBehavior&) = default;

 private:
  std::vector<T> table_;
};

using Behavior = BasicBehavior<double>;
using ExactBehavior = BasicBehavior<Rational>;

inline Behavior to_double(const ExactBehavior& exact) {
  std::vector<double> t(kTableSize);
  for (std::size_t k = 0; k < kTableSize; ++k) t[k] = exact[k].get_d();
  return Behavior(std::move(t));
}

/// Maximally entangled two-ququart state measured in the KS bases:
/// P(x|u) = <v_a|v_b>^2 / (4 |v_a|^2 |v_b|^2), since for real projectors
/// <Psi| Pa (x) Pb |Psi> = Tr(Pa Pb) / 4. Entries are exact with denominators
/// dividing 64.
inline ExactBehavior ideal_quantum_box_exact(const KSModel& model) {
  ExactBehavior b;
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int u2 = 1; u2 <= kNumSettings; ++u2)
      for (int x1 = 1; x1 <= kNumOutcomes; ++x1)
        for (int x2 = 1; x2 <= kNumOutcomes; ++x2) {
          const Vec4& va = model.vector(model.vector_id(u1, x1));
          const Vec4& vb = model.vector(model.vector_id(u2, x2));
          const long ip = dot(va, vb);
          const long den = 4L * dot(va, va) * dot(vb, vb);
          Rational p(ip * ip, den);
          p.canonicalize();
          b.at({u1, u2}, {x1, x2}) = p;
        }
  return b;
}

inline Behavior ideal_quantum_box(const KSModel& model) { return to_double(ideal_quantum_box_exact(model)); }

inline Behavior uniform_box() { return Behavior(std::vector<double>(kTableSize, 1.0 / kNumOutcomePairs)); }

/// Product of local deterministic strategies: P(x|u) = [x = (a(u1), b(u2))].
inline Behavior deterministic_box(const DeterministicStrategy& s) {
  Behavior b;
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int u2 = 1; u2 <= kNumSettings; ++u2)
      b.at({u1, u2}, {s.alice[static_cast<std::size_t>(u1 - 1)], s.bob[static_cast<std::size_t>(u2 - 1)]}) = 1.0;
  return b;
}

/// (1 - eta) b + eta * uniform.
inline Behavior depolarize(const Behavior& b, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("depolarize: eta must lie in [0,1]");
  std::vector<double> t(kTableSize);
  for (std::size_t k = 0; k < kTableSize; ++k) t[k] = (1.0 - eta) * b[k] + eta / kNumOutcomePairs;
  return Behavior(std::move(t));
}

struct BehaviorReport {
  bool ok = false;
  double normalization_residual = 0.0;  // max_u |sum_x P(x|u) - 1|
  double signaling_residual = 0.0;      // max deviation of either marginal across the other setting
  double negativity_residual = 0.0;     // max(0, -min entry)
};

template <class T>
T alice_marginal(const BasicBehavior<T>& b, SettingPair u, int x1) {
  T s(0);
  for (int x2 = 1; x2 <= kNumOutcomes; ++x2) s += b.at(u, {x1, x2});
  return s;
}

template <class T>
T bob_marginal(const BasicBehavior<T>& b, SettingPair u, int x2) {
  T s(0);
  for (int x1 = 1; x1 <= kNumOutcomes; ++x1) s += b.at(u, {x1, x2});
  return s;
}

inline BehaviorReport validate_behavior(const Behavior& b, double tol) {
  BehaviorReport r;
  for (std::size_t k = 0; k < kTableSize; ++k) r.negativity_residual = std::max(r.negativity_residual, -b[k]);
  for (std::size_t s = 0; s < kNumSettingPairs; ++s) {
    const SettingPair u = setting_from_index(s);
    double total = 0.0;
    for (double p : b.row(u)) total += p;
    r.normalization_residual = std::max(r.normalization_residual, std::abs(total - 1.0));
  }
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int x1 = 1; x1 <= kNumOutcomes; ++x1) {
      double lo = 1e300, hi = -1e300;
      for (int u2 = 1; u2 <= kNumSettings; ++u2) {
        const double m = alice_marginal(b, {u1, u2}, x1);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      r.signaling_residual = std::max(r.signaling_residual, hi - lo);
    }
  for (int u2 = 1; u2 <= kNumSettings; ++u2)
    for (int x2 = 1; x2 <= kNumOutcomes; ++x2) {
      double lo = 1e300, hi = -1e300;
      for (int u1 = 1; u1 <= kNumSettings; ++u1) {
        const double m = bob_marginal(b, {u1, u2}, x2);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      r.signaling_residual = std::max(r.signaling_residual, hi - lo);
    }
  r.ok = r.normalization_residual <= tol && r.signaling_residual <= tol && r.negativity_residual <= tol;
  return r;
}

/// True iff the exact table is nonnegative, normalized and no-signaling.
inline bool is_valid_exact(const ExactBehavior& b) {
  for (std::size_t k = 0; k < kTableSize; ++k)
    if (sgn(b[k]) < 0) return false;
  for (std::size_t s = 0; s < kNumSettingPairs; ++s) {
    Rational total = 0;
    for (const auto& p : b.row(setting_from_index(s))) total += p;
    if (total != 1) return false;
  }
  for (int u = 1; u <= kNumSettings; ++u)
    for (int x = 1; x <= kNumOutcomes; ++x)
      for (int v = 2; v <= kNumSettings; ++v) {
        if (alice_marginal(b, {u, v}, x) != alice_marginal(b, {u, 1}, x)) return false;
        if (bob_marginal(b, {v, u}, x) != bob_marginal(b, {1, u}, x)) return false;
      }
  return true;
}

/// Weights over the 81 setting pairs, indexed by setting_index().
struct SettingMeasure {
  std::array<double, kNumSettingPairs> weight{};
  /// Counting measure (every weight 1), used for the raw B.P sum.
  bool counting = false;

  static SettingMeasure uniform() {
    SettingMeasure m;
    m.weight.fill(1.0 / kNumSettingPairs);
    return m;
  }
  static SettingMeasure counting_measure() {
    SettingMeasure m;
    m.weight.fill(1.0);
    m.counting = true;
    return m;
  }
  static SettingMeasure point(SettingPair u) {
    SettingMeasure m;
    m.weight[setting_index(u)] = 1.0;
    return m;
  }
  double at(SettingPair u) const { return weight[setting_index(u)]; }
};

/// Raw B.P = sum over S_B of P(x|u), in the behavior's own scalar type.
template <class T>
T bell_sum(const BasicBehavior<T>& b, const BellFunctional& f) {
  T s(0);
  for (std::size_t k = 0; k < kTableSize; ++k)
    if (f.contains_index(k)) s += b[k];
  return s;
}

/// sum_u nu(u) sum_x B(x,u) P(x|u). Uniform measure gives the uniform Bell
/// value; an SV-induced measure gives the SV Bell value.
inline double bell_value(const Behavior& b, const BellFunctional& f, const SettingMeasure& measure) {
  if (!measure.counting) {
    double total = 0.0;
    for (double w : measure.weight) {
      if (w < 0.0) throw std::invalid_argument("bell_value: negative setting weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("bell_value: setting measure not normalized");
  }
  double value = 0.0;
  for (std::size_t s = 0; s < kNumSettingPairs; ++s) {
    const double w = measure.weight[s];
    if (w == 0.0) continue;
    double row = 0.0;
    for (std::size_t o = 0; o < kNumOutcomePairs; ++o) {
      const std::size_t k = s * kNumOutcomePairs + o;
      if (f.contains_index(k)) row += b[k];
    }
    value += w * row;
  }
  return value;
}

/// Categorical draw by cumulative sums in (x1 outer, x2 inner) order.
/// Consumes exactly one uniform from `rng`.
inline OutcomePair sample_outcome(const Behavior& b, SettingPair u, Rng& rng) {
  const double r = rng.uniform();
  const auto row = b.row(u);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t o = 0; o < kNumOutcomePairs; ++o) {
    if (row[o] <= 0.0) continue;
    last_positive = o;
    cumulative += row[o];
    if (r < cumulative) return outcome_from_index(o);
  }
  return outcome_from_index(last_positive);
}

/// One protocol round as recorded in a transcript.
struct Round {
  SettingPair u;
  OutcomePair x;
  friend bool operator==(const Round&, const Round&) = default;
};

/// A stateful device answering one setting pair per round. The memory holds
/// only past settings, past outcomes and the device's private randomness;
/// the behavior for round k is chosen after seeing u_k and nothing later.
class DeviceOracle {
 public:
  explicit DeviceOracle(std::uint64_t seed) : rng_(seed) {}
  virtual ~DeviceOracle() = default;
  DeviceOracle(const DeviceOracle&) = delete;
  DeviceOracle& operator=(const DeviceOracle&) = delete;

  OutcomePair respond(SettingPair u) {
    if (!valid_setting(u)) throw std::invalid_argument("device: setting out of range");
    last_ = &select_behavior(u);
    const OutcomePair x = sample_outcome(*last_, u, rng_);
    settings_.push_back(u);
    outcomes_.push_back(x);
    return x;
  }

  /// Conditional box that produced the most recent outcome (white-box access
  /// for concentration checks; the protocol itself never reads it).
  const Behavior& last_behavior() const {
    if (!last_) throw std::logic_error("device: no round played yet");
    return *last_;
  }

  std::size_t rounds_played() const { return settings_.size(); }

 protected:
  /// Behavior for the current round given u_k; past rounds are available
  /// through past_settings() and past_outcomes().
  virtual const Behavior& select_behavior(SettingPair u) = 0;

  std::span<const SettingPair> past_settings() const { return settings_; }
  std::span<const OutcomePair> past_outcomes() const { return outcomes_; }

 private:
  Rng rng_;
  std::vector<SettingPair> settings_;
  std::vector<OutcomePair> outcomes_;
  const Behavior* last_ = nullptr;
};

using BehaviorPtr = std::shared_ptr<const Behavior>;

class IidDevice final : public DeviceOracle {
 public:
  IidDevice(BehaviorPtr box, std::uint64_t seed) : DeviceOracle(seed), box_(std::move(box)) {}

 protected:
  const Behavior& select_behavior(SettingPair) override { return *box_; }

 private:
  BehaviorPtr box_;
};

/// Plays `first` for rounds 1..k and `second` afterwards.
class SwitchAfterDevice final : public DeviceOracle {
 public:
  SwitchAfterDevice(std::size_t k, BehaviorPtr first, BehaviorPtr second, std::uint64_t seed)
      : DeviceOracle(seed), k_(k), first_(std::move(first)), second_(std::move(second)) {}

 protected:
  const Behavior& select_behavior(SettingPair) override {
    return past_settings().size() < k_ ? *first_ : *second_;
  }

 private:
  std::size_t k_;
  BehaviorPtr first_;
  BehaviorPtr second_;
};

/// Plays `first` until its own inputs (including the current one) end with
/// `pattern`, then `second` for the rest of the run.
class HistoryTriggerDevice final : public DeviceOracle {
 public:
  HistoryTriggerDevice(std::vector<SettingPair> pattern, BehaviorPtr first, BehaviorPtr second,
                       std::uint64_t seed)
      : DeviceOracle(seed), pattern_(std::move(pattern)), first_(std::move(first)), second_(std::move(second)) {}

  bool triggered() const { return triggered_; }

 protected:
  const Behavior& select_behavior(SettingPair u) override {
    if (!triggered_) {
      const auto past = past_settings();
      const std::size_t len = pattern_.size();
      if (past.size() + 1 >= len && pattern_.back() == u) {
        bool match = true;
        for (std::size_t i = 0; i + 1 < len && match; ++i)
          match = past[past.size() - (len - 1) + i] == pattern_[i];
        triggered_ = match;
      }
    }
    return triggered_ ? *second_ : *first_;
  }

 private:
  std::vector<SettingPair> pattern_;
  BehaviorPtr first_;
  BehaviorPtr second_;
  bool triggered_ = false;
};

struct DeviceSpec {
  enum class Kind { kIid, kSwitchAfter, kHistoryTrigger };
  Kind kind = Kind::kIid;
  BehaviorPtr first;
  BehaviorPtr second;
  std::size_t switch_round = 0;
  std::vector<SettingPair> pattern;

  static DeviceSpec iid(BehaviorPtr b) {
    DeviceSpec s;
    s.first = std::move(b);
    return s;
  }
  static DeviceSpec switch_after(std::size_t k, BehaviorPtr b1, BehaviorPtr b2) {
    DeviceSpec s;
    s.kind = Kind::kSwitchAfter;
    s.switch_round = k;
    s.first = std::move(b1);
    s.second = std::move(b2);
    return s;
  }
  static DeviceSpec history_trigger(std::vector<SettingPair> pattern, BehaviorPtr b1, BehaviorPtr b2) {
    DeviceSpec s;
    s.kind = Kind::kHistoryTrigger;
    s.pattern = std::move(pattern);
    s.first = std::move(b1);
    s.second = std::move(b2);
    return s;
  }
};

inline void check_device_behavior(const BehaviorPtr& b) {
  if (!b) throw std::invalid_argument("device spec: missing behavior");
  const auto report = validate_behavior(*b, 1e-9);
  if (!report.ok) throw std::invalid_argument("device spec: behavior is not a valid no-signaling box");
}

inline std::unique_ptr<DeviceOracle> make_device(const DeviceSpec& spec, std::uint64_t seed) {
  check_device_behavior(spec.first);
  switch (spec.kind) {
    case DeviceSpec::Kind::kIid:
      return std::make_unique<IidDevice>(spec.first, seed);
    case DeviceSpec::Kind::kSwitchAfter:
      check_device_behavior(spec.second);
      return std::make_unique<SwitchAfterDevice>(spec.switch_round, spec.first, spec.second, seed);
    case DeviceSpec::Kind::kHistoryTrigger:
      check_device_behavior(spec.second);
      if (spec.pattern.empty()) throw std::invalid_argument("device spec: empty trigger pattern");
      for (const auto& u : spec.pattern)
        if (!valid_setting(u)) throw std::invalid_argument("device spec: trigger pattern setting out of range");
      return std::make_unique<HistoryTriggerDevice>(spec.pattern, spec.first, spec.second, seed);
  }
  throw std::invalid_argument("device spec: unknown kind");
}

inline std::unique_ptr<DeviceOracle> make_iid_device(const Behavior& b, std::uint64_t seed) {
  return make_device(DeviceSpec::iid(std::make_shared<const Behavior>(b)), seed);
}

}  // namespace svamp
