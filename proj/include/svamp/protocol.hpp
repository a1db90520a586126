#pragma once

// The amplification protocol: n rounds of SV-chosen settings against a
// device oracle, a Bell test, a tomographic test, and extraction from the
// accepted transcript. Also the parameter chain of the security statement,
// the composable distance for toy tables, and seeded Monte Carlo campaigns.

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "svamp/bounds.hpp"
#include "svamp/boxes.hpp"
#include "svamp/extractor.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/ns_certify.hpp"
#include "svamp/rng.hpp"
#include "svamp/sv_source.hpp"

namespace svamp {

/// Largest admissible Bell threshold:
/// min{ (1/2 - eps)^16 / 8, ((mu1 - 2 kappa) / (2 (1 - kappa)))^2 / 2 }.
inline double select_params(double epsilon, double mu1, double kappa) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("select_params: epsilon must be in [0, 1/2)");
  if (!(kappa > 0.0 && kappa < mu1 / 2.0)) throw std::invalid_argument("select_params: need 0 < kappa < mu1/2");
  const double source_term = std::pow(0.5 - epsilon, 16) / 8.0;
  const double mu3 = random_round_fraction(mu1, kappa);
  return std::min(source_term, mu3 * mu3 / 2.0);
}

struct ProtocolParams {
  std::size_t n = 100000;
  double epsilon = 0.0;
  double delta = 1e-8;
  double mu1 = 5e-4;
  double kappa = 1e-4;
  std::string map = SettingMap{}.name;
  ExtractorConfig extractor{ExtractorMode::kInnerProduct, 64, 0, SelectionRule::kTargetRounds};

  /// Throws std::invalid_argument on violation. With theorem_constraints
  /// false only the test thresholds themselves are checked, which admits
  /// Bell thresholds above the admissible maximum for noise studies.
  void validate(bool theorem_constraints = true) const {
    if (n == 0) throw std::invalid_argument("params: n must be positive");
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("params: epsilon must be in [0, 1/2)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("params: delta must be in (0, 1)");
    if (!(mu1 > 0.0 && mu1 <= 1.0)) throw std::invalid_argument("params: mu1 must be in (0, 1]");
    if (map != SettingMap{}.name) throw std::invalid_argument("params: unknown setting map " + map);
    if (!theorem_constraints) return;
    if (!(kappa > 0.0 && kappa < mu1 / 2.0)) throw std::invalid_argument("params: need 0 < kappa < mu1/2");
    if (!(delta < select_params(epsilon, mu1, kappa)))
      throw std::invalid_argument("params: delta must be below the admissible maximum");
  }
};

enum class Verdict { kAccept, kAbortBell, kAbortTomography };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kAccept: return "accept";
    case Verdict::kAbortBell: return "abort_bell";
    case Verdict::kAbortTomography: return "abort_tomography";
  }
  return "unknown";
}

inline Verdict verdict_from_string(const std::string& s) {
  for (auto v : {Verdict::kAccept, Verdict::kAbortBell, Verdict::kAbortTomography})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown verdict: " + s);
}

struct Evaluation {
  std::size_t bell_count = 0;
  std::size_t target_count = 0;
  double l_n = 0.0;
  double s_n = 0.0;
  Verdict verdict = Verdict::kAbortBell;
  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

/// L_n, S_n and the verdict from a transcript. The Bell test runs first.
inline Evaluation evaluate(const std::vector<Round>& rounds, const BellFunctional& f, double delta, double mu1) {
  if (rounds.empty()) throw std::invalid_argument("evaluate: empty transcript");
  Evaluation e;
  for (const auto& r : rounds) {
    if (!valid_setting(r.u) || !valid_outcome(r.x)) throw std::invalid_argument("evaluate: round out of range");
    if (f.contains(r.u, r.x)) ++e.bell_count;
    if (f.is_target(r.u, r.x)) ++e.target_count;
  }
  const double n = static_cast<double>(rounds.size());
  e.l_n = static_cast<double>(e.bell_count) / n;
  e.s_n = static_cast<double>(e.target_count) / n;
  if (!(e.l_n <= delta)) {
    e.verdict = Verdict::kAbortBell;
  } else if (!(e.s_n >= mu1)) {
    e.verdict = Verdict::kAbortTomography;
  } else {
    e.verdict = Verdict::kAccept;
  }
  return e;
}

struct ProtocolRun {
  ProtocolParams params;
  std::vector<Round> rounds;
  Evaluation eval;
  Bits t_bits;
  Bits output;
  std::size_t source_rounds = 0;  // transcript rounds fed to the extractor
  std::uint64_t master_seed = 0;
  std::uint64_t device_seed = 0;
  std::uint64_t source_seed = 0;

  bool accepted() const { return eval.verdict == Verdict::kAccept; }
};

struct RunOptions {
  bool theorem_constraints = true;
  bool keep_rounds = true;
  bool extract_output = true;
};

/// Rounds draw 8 source bits each, then query the device. On acceptance a
/// further n bits t come from the same source stream and feed the extractor
/// together with the selected transcript bits.
inline ProtocolRun run_protocol(DeviceOracle& device, SVSource& source, const ProtocolParams& p,
                                const BellFunctional& f, const RunOptions& options = {}) {
  p.validate(options.theorem_constraints);
  ProtocolRun run;
  run.params = p;
  run.rounds.reserve(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const SettingPair u = source.next_setting();
    const OutcomePair x = device.respond(u);
    run.rounds.push_back({u, x});
  }
  run.eval = evaluate(run.rounds, f, p.delta, p.mu1);
  if (run.accepted() && options.extract_output) {
    for (int b : source.next_bits(p.n)) run.t_bits.push_back(static_cast<std::uint8_t>(b));
    const auto xs = transcript_to_source(run.rounds, true, p.extractor.rule);
    run.source_rounds = xs.rounds_selected;
    ExtractorConfig cfg = p.extractor;
    const std::size_t L = cfg.L ? cfg.L : std::min(xs.bits.size(), run.t_bits.size());
    cfg.m = std::min(cfg.m, L);
    run.output = extract(xs.bits, run.t_bits, cfg);
  }
  if (!options.keep_rounds) run.rounds.clear();
  return run;
}

/// Seeds the device and the source from one master seed:
/// device = derive_seed(master, kDevice), source = derive_seed(master, kSource).
/// The device is built before any source bit is drawn.
inline ProtocolRun run_protocol(const DeviceSpec& device_spec, const SourceSpec& source_spec, const ProtocolParams& p,
                                const BellFunctional& f, std::uint64_t master_seed, const RunOptions& options = {}) {
  const std::uint64_t device_seed = derive_seed(master_seed, StreamRole::kDevice);
  const std::uint64_t source_seed = derive_seed(master_seed, StreamRole::kSource);
  auto device = make_device(device_spec, device_seed);
  SVSource source(source_spec, source_seed);
  auto run = run_protocol(*device, source, p, f, options);
  run.master_seed = master_seed;
  run.device_seed = device_seed;
  run.source_seed = source_seed;
  return run;
}

/// nu(u*) P(x*|u*).
inline double expected_tomography_rate(const Behavior& b, const SettingMeasure& measure) {
  return measure.at(kTargetSetting) * b.at(kTargetSetting, kTargetOutcome);
}

/// Range of tomography thresholds the honest device can pass: mu1 must
/// exceed 2 kappa and stay below the ideal box's tomography rate. The
/// worst-case edge uses the smallest weight of u* any eps-SV source can force.
struct Mu1Window {
  double lower = 0.0;             // 2 kappa
  double upper_uniform = 0.0;     // rate under unbiased setting bits
  double upper_worst_case = 0.0;  // rate under the target-avoiding source
  bool contains(double mu1) const { return mu1 > lower && mu1 < upper_worst_case; }
};

inline Mu1Window mu1_window(double epsilon, double kappa, const Behavior& ideal) {
  const double target = ideal.at(kTargetSetting, kTargetOutcome);
  Mu1Window w;
  w.lower = 2.0 * kappa;
  w.upper_uniform = expected_tomography_rate(ideal, uniform_bits_measure());
  w.upper_worst_case =
      setting_measure_bounds(rational_from_double(epsilon), SettingMap{}, kTargetSetting).exact_min.get_d() * target;
  return w;
}

/// Depolarizing weight at which the expected Bell rate under `measure`
/// reaches delta.
inline double white_noise_tolerance(double delta, const BellFunctional& f, const SettingMeasure& measure) {
  return delta / bell_value(uniform_box(), f, measure);
}

// ---------------------------------------------------------------------------
// Security parameter chain

struct SecurityReport {
  std::size_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double mu1 = 0.0;
  double kappa = 0.0;
  double delta_max = 0.0;
  double mu2 = 0.0;              // 1 - sqrt(2 delta)
  double mu3 = 0.0;              // (mu1 - 2 kappa) / (2 (1 - kappa))
  double mu4 = 0.0;              // mu2 + mu3 - 1
  double gamma_bell = 0.0;       // (3 + 2 sqrt(2 delta) / (1/2 - eps)^8) / 4
  double gamma = 0.0;            // max{1 - kappa, gamma_bell}
  double eps_az1 = 0.0;          // 2 exp(-n delta^2 / 4)
  double eps_az2 = 0.0;          // 2 exp(-n mu1^2 / 16)
  double gamma_power = 0.0;      // gamma^(mu4 n)
  double delta1 = 0.0;           // 2 (eps_az1 + eps_az2) + gamma^(mu4 n)
  double min_entropy_bits = 0.0; // mu4 n log2(1/gamma)
  double zeta = 0.0;             // 1 - (1/2 - eps)^8
  /// 1 - exp(-2n (1 - mu1 - zeta)^2): probability that u* occupies at least
  /// a mu1 fraction of rounds; only meaningful when mu1 <= 1 - zeta.
  std::optional<double> chernoff_accept;

  /// Guarantee over accepted transcripts: with probability at least
  /// 1 - sqrt(delta1 / q_acc), max_x q(x | ..., ACC) <= sqrt(delta1 / q_acc).
  double guarantee(double q_acc) const { return std::sqrt(delta1 / q_acc); }
};

inline SecurityReport security_report(const ProtocolParams& p) {
  p.validate();
  SecurityReport r;
  r.n = p.n;
  r.epsilon = p.epsilon;
  r.delta = p.delta;
  r.mu1 = p.mu1;
  r.kappa = p.kappa;
  r.delta_max = select_params(p.epsilon, p.mu1, p.kappa);
  const double root = std::sqrt(2.0 * p.delta);
  const double n = static_cast<double>(p.n);
  const double low8 = std::pow(0.5 - p.epsilon, 8);
  r.mu2 = 1.0 - root;
  r.mu3 = random_round_fraction(p.mu1, p.kappa);
  r.mu4 = r.mu3 - root;  // mu2 + mu3 - 1 without the cancellation
  r.gamma_bell = (3.0 + 2.0 * root / low8) / 4.0;
  const double log_gamma = 1.0 - p.kappa >= r.gamma_bell ? std::log1p(-p.kappa) : std::log(r.gamma_bell);
  r.gamma = std::max(1.0 - p.kappa, r.gamma_bell);
  r.eps_az1 = eps_az_bell(p.n, p.delta);
  r.eps_az2 = eps_az_tomography(p.n, p.mu1);
  r.gamma_power = std::exp(r.mu4 * n * log_gamma);
  r.delta1 = 2.0 * (r.eps_az1 + r.eps_az2) + r.gamma_power;
  r.min_entropy_bits = -r.mu4 * n * log_gamma / std::log(2.0);
  r.zeta = 1.0 - low8;
  const double gap = 1.0 - p.mu1 - r.zeta;
  if (gap >= 0.0) r.chernoff_accept = 1.0 - std::exp(-2.0 * n * gap * gap);
  return r;
}

// ---------------------------------------------------------------------------
// Composable distance

/// p(s, z, e | w, ACC) for toy alphabet sizes, stored with w outermost and e
/// fastest. Each w-slice must sum to 1.
struct JointTable {
  std::size_t s = 0, z = 0, e = 0, w = 0;
  std::vector<double> p;

  double at(std::size_t si, std::size_t zi, std::size_t ei, std::size_t wi) const {
    return p[((wi * s + si) * z + zi) * e + ei];
  }
};

struct DistanceReport {
  double dc = 0.0;  // sum_{s,e} max_w sum_z |p(s,z,e|w) - p(z,e|w)/|S||
  double d = 0.0;   // sum_e max_w sum_{z,s} |p(s,z,e|w) - p(z,e|w)/|S||
  bool relation_holds = false;  // dc <= |S| d
};

inline DistanceReport dc_distance(const JointTable& t) {
  if (t.s == 0 || t.z == 0 || t.e == 0 || t.w == 0) throw std::invalid_argument("dc_distance: empty alphabet");
  if (t.s * t.z * t.e * t.w > 1000000) throw std::invalid_argument("dc_distance: table too large");
  if (t.p.size() != t.s * t.z * t.e * t.w) throw std::invalid_argument("dc_distance: table size mismatch");
  for (std::size_t wi = 0; wi < t.w; ++wi) {
    double total = 0.0;
    for (std::size_t si = 0; si < t.s; ++si)
      for (std::size_t zi = 0; zi < t.z; ++zi)
        for (std::size_t ei = 0; ei < t.e; ++ei) {
          const double v = t.at(si, zi, ei, wi);
          if (v < 0.0) throw std::invalid_argument("dc_distance: negative probability");
          total += v;
        }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("dc_distance: table not normalized");
  }
  const double inv_s = 1.0 / static_cast<double>(t.s);
  auto term = [&](std::size_t si, std::size_t zi, std::size_t ei, std::size_t wi) {
    double marginal = 0.0;
    for (std::size_t sj = 0; sj < t.s; ++sj) marginal += t.at(sj, zi, ei, wi);
    return std::abs(t.at(si, zi, ei, wi) - inv_s * marginal);
  };
  DistanceReport r;
  for (std::size_t ei = 0; ei < t.e; ++ei) {
    for (std::size_t si = 0; si < t.s; ++si) {
      double best = 0.0;
      for (std::size_t wi = 0; wi < t.w; ++wi) {
        double sum = 0.0;
        for (std::size_t zi = 0; zi < t.z; ++zi) sum += term(si, zi, ei, wi);
        best = std::max(best, sum);
      }
      r.dc += best;
    }
    double best = 0.0;
    for (std::size_t wi = 0; wi < t.w; ++wi) {
      double sum = 0.0;
      for (std::size_t si = 0; si < t.s; ++si)
        for (std::size_t zi = 0; zi < t.z; ++zi) sum += term(si, zi, ei, wi);
      best = std::max(best, sum);
    }
    r.d += best;
  }
  r.relation_holds = r.dc <= static_cast<double>(t.s) * r.d + 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// Campaigns

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Evaluation eval;
};

struct CampaignStats {
  std::size_t trials = 0;
  std::size_t accepts = 0;
  std::size_t abort_bell = 0;
  std::size_t abort_tomography = 0;
  double accept_rate = 0.0;
  double ci_low = 0.0;   // Clopper-Pearson, 95%
  double ci_high = 0.0;
  double mean_l_n = 0.0;
  double mean_s_n = 0.0;
  std::vector<TrialRecord> records;
};

/// Trial t runs with master seed derive_seed(master_seed, t). Trials are
/// split across `workers` threads; results do not depend on the split.
inline CampaignStats monte_carlo(const DeviceSpec& device, const SourceSpec& source, const ProtocolParams& p,
                                 const BellFunctional& f, std::size_t trials, std::uint64_t master_seed,
                                 RunOptions options = {}, unsigned workers = 1) {
  if (trials == 0) throw std::invalid_argument("monte_carlo: trials must be at least 1");
  p.validate(options.theorem_constraints);
  options.keep_rounds = false;
  options.extract_output = false;
  CampaignStats stats;
  stats.trials = trials;
  stats.records.resize(trials);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t t = begin; t < trials; t += step) {
      const std::uint64_t seed = derive_seed(master_seed, t);
      const auto run = run_protocol(device, source, p, f, seed, options);
      stats.records[t] = {t, seed, run.eval};
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(trials)));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& th : pool) th.join();
  }
  for (const auto& r : stats.records) {
    switch (r.eval.verdict) {
      case Verdict::kAccept: ++stats.accepts; break;
      case Verdict::kAbortBell: ++stats.abort_bell; break;
      case Verdict::kAbortTomography: ++stats.abort_tomography; break;
    }
    stats.mean_l_n += r.eval.l_n;
    stats.mean_s_n += r.eval.s_n;
  }
  const double n = static_cast<double>(trials);
  stats.accept_rate = static_cast<double>(stats.accepts) / n;
  stats.mean_l_n /= n;
  stats.mean_s_n /= n;
  using boost::math::binomial_distribution;
  stats.ci_low = binomial_distribution<>::find_lower_bound_on_p(n, static_cast<double>(stats.accepts), 0.025);
  stats.ci_high = binomial_distribution<>::find_upper_bound_on_p(n, static_cast<double>(stats.accepts), 0.025);
  return stats;
}

/// The delta_tilde = 0 LP solution that minimizes P(x*|u*): a no-signaling
/// box with zero Bell value that never produces the tomography event.
inline Behavior attack_box(const BellFunctional& f) {
  const auto p = build_lp(f, Rational(0), {kTargetOutcome, kTargetSetting}, ObjectiveSense::kMinimize);
  const auto sol = solve_lp(p, SolveMode::kExact);
  return sol.primal;
}

}  // namespace svamp
