#pragma once

// Linear program over no-signaling behaviors with a capped Bell value,
//
//   maximize  P(x_t|u_t)
//   s.t.      normalization, pairwise no-signaling, B.P <= delta_tilde, P >= 0,
//
// solved by simplex, with the optimum certified by an exact-rational dual
// solution that can be checked without the solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svamp/boxes.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/rational.hpp"
#include "svamp/rng.hpp"
#include "svamp/simplex.hpp"

namespace svamp {

enum class RowKind { kNormalization, kAliceNoSignaling, kBobNoSignaling, kBellCap };
enum class ObjectiveSense { kMaximize, kMinimize };

struct LpRow {
  RowKind kind = RowKind::kNormalization;
  std::vector<std::pair<std::size_t, int>> coeffs;  // (variable, coefficient)
  Rational rhs = 0;
};

struct LPProblem {
  std::size_t num_vars = kTableSize;
  BellTuple target{kTargetOutcome, kTargetSetting};
  ObjectiveSense sense = ObjectiveSense::kMaximize;
  /// 81 normalization rows, then 288 Alice and 288 Bob no-signaling rows.
  std::vector<LpRow> equalities;
  /// B.P <= delta_tilde. Nonnegativity bounds are implicit (one per variable).
  LpRow bell_cap;
  Rational delta_tilde = 0;

  std::size_t objective_index() const { return table_index(target.u, target.x); }
  /// +1 when maximizing P(target), -1 when minimizing.
  int objective_sign() const { return sense == ObjectiveSense::kMaximize ? 1 : -1; }
};

/// No-signaling is written pairwise against setting 1 of the other party:
/// sum_x2 P(x1,x2|u1,u2) - sum_x2 P(x1,x2|u1,1) = 0 for u2 = 2..9, and
/// symmetrically for Bob.
inline LPProblem build_lp(const BellFunctional& f, const Rational& delta_tilde,
                          BellTuple target = {kTargetOutcome, kTargetSetting},
                          ObjectiveSense sense = ObjectiveSense::kMaximize) {
  if (sgn(delta_tilde) < 0) throw std::invalid_argument("build_lp: delta_tilde must be nonnegative");
  if (!valid_setting(target.u) || !valid_outcome(target.x)) throw std::invalid_argument("build_lp: invalid target");
  LPProblem p;
  p.target = target;
  p.sense = sense;
  p.delta_tilde = delta_tilde;
  p.equalities.reserve(81 + 288 + 288);

  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int u2 = 1; u2 <= kNumSettings; ++u2) {
      LpRow row{RowKind::kNormalization, {}, 1};
      for (int o = 0; o < kNumOutcomePairs; ++o)
        row.coeffs.emplace_back(table_index({u1, u2}, outcome_from_index(static_cast<std::size_t>(o))), 1);
      p.equalities.push_back(std::move(row));
    }
  for (int u1 = 1; u1 <= kNumSettings; ++u1)
    for (int x1 = 1; x1 <= kNumOutcomes; ++x1)
      for (int u2 = 2; u2 <= kNumSettings; ++u2) {
        LpRow row{RowKind::kAliceNoSignaling, {}, 0};
        for (int x2 = 1; x2 <= kNumOutcomes; ++x2) {
          row.coeffs.emplace_back(table_index({u1, u2}, {x1, x2}), 1);
          row.coeffs.emplace_back(table_index({u1, 1}, {x1, x2}), -1);
        }
        p.equalities.push_back(std::move(row));
      }
  for (int u2 = 1; u2 <= kNumSettings; ++u2)
    for (int x2 = 1; x2 <= kNumOutcomes; ++x2)
      for (int u1 = 2; u1 <= kNumSettings; ++u1) {
        LpRow row{RowKind::kBobNoSignaling, {}, 0};
        for (int x1 = 1; x1 <= kNumOutcomes; ++x1) {
          row.coeffs.emplace_back(table_index({u1, u2}, {x1, x2}), 1);
          row.coeffs.emplace_back(table_index({1, u2}, {x1, x2}), -1);
        }
        p.equalities.push_back(std::move(row));
      }

  p.bell_cap.kind = RowKind::kBellCap;
  p.bell_cap.rhs = delta_tilde;
  for (std::size_t k = 0; k < kTableSize; ++k)
    if (f.contains_index(k)) p.bell_cap.coeffs.emplace_back(k, 1);
  return p;
}

inline LPProblem build_lp(const BellFunctional& f, double delta_tilde,
                          BellTuple target = {kTargetOutcome, kTargetSetting},
                          ObjectiveSense sense = ObjectiveSense::kMaximize) {
  return build_lp(f, rational_from_double(delta_tilde), target, sense);
}

/// Dual solution proving  max (sign * P(target)) <= bound  over the LP's
/// feasible set, where sign is +1 for a maximization problem and -1 for a
/// minimization problem.
struct DualCertificate {
  Rational delta_tilde = 0;
  ObjectiveSense sense = ObjectiveSense::kMaximize;
  std::vector<Rational> equality_multipliers;    // free, one per equality row
  Rational bell_multiplier = 0;                  // >= 0
  std::vector<Rational> positivity_multipliers;  // >= 0, one per variable
  Rational bound = 0;  // upper bound on sign * P(target), sign = +1 when maximizing
};

/// Exact dual check: A_eq^T y + lambda_bell * B - lambda_pos = sign * M,
/// lambda_bell >= 0, lambda_pos >= 0 and b^T y + delta_tilde * lambda_bell <= bound.
inline bool verify_certificate(const LPProblem& p, const DualCertificate& d) {
  if (d.equality_multipliers.size() != p.equalities.size()) return false;
  if (d.positivity_multipliers.size() != p.num_vars) return false;
  if (d.sense != p.sense || d.delta_tilde != p.delta_tilde) return false;
  if (sgn(d.bell_multiplier) < 0) return false;
  for (const auto& l : d.positivity_multipliers)
    if (sgn(l) < 0) return false;

  std::vector<Rational> lhs(p.num_vars, Rational(0));
  Rational value = 0;
  for (std::size_t r = 0; r < p.equalities.size(); ++r) {
    const Rational& y = d.equality_multipliers[r];
    if (sgn(y) == 0) continue;
    for (const auto& [var, coeff] : p.equalities[r].coeffs) lhs[var] += coeff * y;
    value += p.equalities[r].rhs * y;
  }
  for (const auto& [var, coeff] : p.bell_cap.coeffs) lhs[var] += coeff * d.bell_multiplier;
  value += p.bell_cap.rhs * d.bell_multiplier;
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    lhs[j] -= d.positivity_multipliers[j];
    const Rational expected = j == p.objective_index() ? Rational(p.objective_sign()) : Rational(0);
    if (lhs[j] != expected) return false;
  }
  return value <= d.bound;
}

enum class SolveMode { kFloat, kExact };

struct LpSolution {
  SolveMode mode = SolveMode::kFloat;  // mode that produced the answer
  bool retried_exact = false;          // floating mode failed and exact mode took over
  double optimum = 0.0;  // optimal P(target)
  std::optional<Rational> exact_optimum;
  Behavior primal;
  std::optional<ExactBehavior> exact_primal;
  DualCertificate dual;
  std::size_t pivots = 0;
};

namespace detail {

/// Indices of a maximal linearly independent subset of the equality rows,
/// chosen greedily in row order by elimination modulo a prime. Rows that are
/// independent mod p are independent over the rationals; the converse can
/// fail only if p divides a minor, which the exact primal check would expose.
inline std::vector<std::size_t> independent_equality_rows(const LPProblem& p) {
  constexpr std::uint64_t kPrime = 2305843009213693951ULL;  // 2^61 - 1
  auto mulmod = [](std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % kPrime);
  };
  auto powmod = [&](std::uint64_t a, std::uint64_t e) {
    std::uint64_t r = 1;
    for (; e; e >>= 1, a = mulmod(a, a))
      if (e & 1) r = mulmod(r, a);
    return r;
  };
  std::vector<std::vector<std::uint64_t>> basis;  // reduced rows, pivot = first nonzero
  std::vector<std::size_t> pivots;
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < p.equalities.size(); ++r) {
    std::vector<std::uint64_t> v(p.num_vars, 0);
    for (const auto& [var, coeff] : p.equalities[r].coeffs)
      v[var] = (v[var] + (coeff >= 0 ? static_cast<std::uint64_t>(coeff) : kPrime - static_cast<std::uint64_t>(-coeff))) % kPrime;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const std::uint64_t f = v[pivots[k]];
      if (f == 0) continue;
      for (std::size_t j = 0; j < p.num_vars; ++j)
        if (basis[k][j]) v[j] = (v[j] + kPrime - mulmod(f, basis[k][j])) % kPrime;
    }
    const auto it = std::find_if(v.begin(), v.end(), [](std::uint64_t x) { return x != 0; });
    if (it == v.end()) continue;
    const std::uint64_t inv = powmod(*it, kPrime - 2);
    for (auto& x : v) x = mulmod(x, inv);
    pivots.push_back(static_cast<std::size_t>(it - v.begin()));
    basis.push_back(std::move(v));
    kept.push_back(r);
  }
  return kept;
}

/// Standard form over the given equality rows plus the Bell row, which is
/// last. Column num_vars is the Bell-cap slack.
template <class Scalar>
StandardFormLp<Scalar> to_standard_form(const LPProblem& p, const std::vector<std::size_t>& rows) {
  auto conv = [](const Rational& v) {
    if constexpr (std::is_same_v<Scalar, Rational>) {
      return v;
    } else {
      return v.get_d();
    }
  };
  StandardFormLp<Scalar> lp;
  lp.num_rows = rows.size() + 1;
  lp.num_cols = p.num_vars + 1;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (const auto& [var, coeff] : p.equalities[rows[k]].coeffs) lp.entries.push_back({k, var, Scalar(coeff)});
    lp.rhs.push_back(conv(p.equalities[rows[k]].rhs));
  }
  const std::size_t bell_row = rows.size();
  for (const auto& [var, coeff] : p.bell_cap.coeffs) lp.entries.push_back({bell_row, var, Scalar(coeff)});
  lp.entries.push_back({bell_row, p.num_vars, Scalar(1)});
  lp.rhs.push_back(conv(p.bell_cap.rhs));
  lp.cost.assign(lp.num_cols, Scalar(0));
  lp.cost[p.objective_index()] = Scalar(-p.objective_sign());
  return lp;
}

inline Rational as_rational(double v) { return rational_from_double(v); }
inline const Rational& as_rational(const Rational& v) { return v; }

/// Multipliers of dropped rows are zero.
template <class Scalar>
DualCertificate certificate_from(const LPProblem& p, const std::vector<std::size_t>& rows,
                                 const SimplexResult<Scalar>& r) {
  DualCertificate d;
  d.delta_tilde = p.delta_tilde;
  d.sense = p.sense;
  d.equality_multipliers.assign(p.equalities.size(), Rational(0));
  for (std::size_t k = 0; k < rows.size(); ++k) d.equality_multipliers[rows[k]] = -as_rational(r.row_duals[k]);
  d.bell_multiplier = -as_rational(r.row_duals.back());
  d.positivity_multipliers.resize(p.num_vars);
  for (std::size_t j = 0; j < p.num_vars; ++j) d.positivity_multipliers[j] = as_rational(r.reduced_costs[j]);
  Rational bound = 0;
  for (std::size_t i = 0; i < p.equalities.size(); ++i) bound += p.equalities[i].rhs * d.equality_multipliers[i];
  bound += p.bell_cap.rhs * d.bell_multiplier;
  d.bound = bound;
  return d;
}

/// Largest violation of primal feasibility, dual feasibility, or the duality gap.
inline double float_solution_defect(const LPProblem& p, const std::vector<std::size_t>& rows,
                                    const SimplexResult<double>& r) {
  double defect = 0.0;
  for (std::size_t j = 0; j <= p.num_vars; ++j) defect = std::max(defect, -r.primal[j]);
  for (std::size_t j = 0; j < p.num_vars; ++j) defect = std::max(defect, -r.reduced_costs[j]);
  for (const auto& row : p.equalities) {
    double s = 0.0;
    for (const auto& [var, coeff] : row.coeffs) s += coeff * r.primal[var];
    defect = std::max(defect, std::abs(s - row.rhs.get_d()));
  }
  double bell = 0.0;
  for (const auto& [var, coeff] : p.bell_cap.coeffs) bell += coeff * r.primal[var];
  defect = std::max(defect, bell - p.bell_cap.rhs.get_d());
  defect = std::max(defect, r.row_duals.back());  // lambda_bell = -y must be >= 0
  double dual_value = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) dual_value -= p.equalities[rows[k]].rhs.get_d() * r.row_duals[k];
  dual_value -= p.bell_cap.rhs.get_d() * r.row_duals.back();
  const double primal_value = p.objective_sign() * r.primal[p.objective_index()];
  defect = std::max(defect, std::abs(dual_value - primal_value));
  return defect;
}

/// Every original row, including those dropped as dependent, in exact arithmetic.
inline bool exact_primal_feasible(const LPProblem& p, const std::vector<Rational>& x) {
  for (std::size_t j = 0; j < p.num_vars; ++j)
    if (sgn(x[j]) < 0) return false;
  for (const auto& row : p.equalities) {
    Rational s = 0;
    for (const auto& [var, coeff] : row.coeffs) s += coeff * x[var];
    if (s != row.rhs) return false;
  }
  Rational bell = 0;
  for (const auto& [var, coeff] : p.bell_cap.coeffs) bell += coeff * x[var];
  return bell <= p.bell_cap.rhs;
}

/// The LP is highly degenerate and Bland's rule can stall for 10^5 pivots
/// at some caps. A first pass on a randomly perturbed right-hand side finds
/// a nearly optimal basis; the unperturbed problem is then warm-started from
/// it. Perturbation can make tight instances infeasible, so a cold solve
/// remains the fallback.
inline SimplexResult<double> solve_float(const StandardFormLp<double>& lp) {
  constexpr double kPerturbation = 1e-6;
  StandardFormLp<double> perturbed = lp;
  Rng rng(0x5eed);
  for (auto& b : perturbed.rhs) b += kPerturbation * (1.0 + rng.uniform());
  const auto pr = solve_simplex(perturbed);
  if (pr.status == SimplexStatus::kOptimal) {
    SimplexOptions options;
    for (std::size_t col : pr.basis)
      if (col < lp.num_cols) options.crash_basis.push_back(col);
    auto r = solve_simplex(lp, options);
    r.pivots += pr.pivots;
    if (r.status == SimplexStatus::kOptimal) return r;
  }
  auto r = solve_simplex(lp);
  r.pivots += pr.pivots;
  return r;
}

}  // namespace detail

/// Solves the LP. Floating mode falls back to exact mode when its answer
/// fails a residual check. Exact mode warm-starts from the floating basis
/// and finishes with exact pivots, so the returned certificate verifies in
/// exact arithmetic.
inline LpSolution solve_lp(const LPProblem& p, SolveMode mode = SolveMode::kExact) {
  constexpr double kFloatDefectTol = 1e-7;
  LpSolution out;

  const auto rows = detail::independent_equality_rows(p);
  const auto float_lp = detail::to_standard_form<double>(p, rows);
  const auto fr = detail::solve_float(float_lp);
  const bool float_ok =
      fr.status == SimplexStatus::kOptimal && detail::float_solution_defect(p, rows, fr) <= kFloatDefectTol;
  out.pivots = fr.pivots;

  if (mode == SolveMode::kFloat && float_ok) {
    out.mode = SolveMode::kFloat;
    out.optimum = fr.primal[p.objective_index()];
    out.primal = Behavior(std::vector<double>(fr.primal.begin(), fr.primal.begin() + static_cast<std::ptrdiff_t>(p.num_vars)));
    out.dual = detail::certificate_from(p, rows, fr);
    return out;
  }
  out.retried_exact = mode == SolveMode::kFloat;

  SimplexOptions options;
  if (fr.status == SimplexStatus::kOptimal) {
    for (std::size_t col : fr.basis)
      if (col < float_lp.num_cols) options.crash_basis.push_back(col);
  }
  const auto exact_lp = detail::to_standard_form<Rational>(p, rows);
  const auto er = solve_simplex(exact_lp, options);
  if (er.status != SimplexStatus::kOptimal)
    throw std::runtime_error("solve_lp: exact simplex did not reach an optimum");

  out.mode = SolveMode::kExact;
  out.pivots += er.pivots;
  if (!detail::exact_primal_feasible(p, er.primal))
    throw std::runtime_error("solve_lp: exact primal violates a dropped equality row");
  ExactBehavior exact(std::vector<Rational>(er.primal.begin(), er.primal.begin() + static_cast<std::ptrdiff_t>(p.num_vars)));
  out.exact_optimum = exact[p.objective_index()];
  out.optimum = out.exact_optimum->get_d();
  out.primal = to_double(exact);
  out.exact_primal = std::move(exact);
  out.dual = detail::certificate_from(p, rows, er);
  return out;
}

/// Upper bound on P(x*|u*) for a no-signaling box whose SV-weighted Bell
/// value is at most delta:  min(1, (3 + 2 delta / (1/2 - eps)^8) / 4).
/// Only the lower side nu(u) >= (1/2 - eps)^8 of the setting measure enters.
inline double randomness_bound(double delta, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("randomness_bound: epsilon must be in [0, 1/2)");
  if (!(delta >= 0.0)) throw std::invalid_argument("randomness_bound: delta must be nonnegative");
  const double delta_tilde = delta / std::pow(0.5 - epsilon, 8);
  return std::min(1.0, (3.0 + 2.0 * delta_tilde) / 4.0);
}

/// Closed form (3 + 2 delta_tilde)/4 in exact arithmetic, uncapped.
inline Rational target_bound_exact(const Rational& delta_tilde) { return (Rational(3) + 2 * delta_tilde) / 4; }

}  // namespace svamp
