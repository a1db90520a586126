#pragma once

// Dense-tableau primal simplex templated on the scalar field. Instantiated
// with double (fast mode) and Rational (exact mode).
//
// Problem form:  minimize c^T x  subject to  A x = b,  x >= 0,  b >= 0.
// Row duals y and reduced costs d = c - A^T y are returned at the optimum.
//
// One artificial column per row stays in the tableau for the whole run.
// Those columns hold B^{-1}, which yields the row duals and drives the
// floating-mode refinement step. Rows should be linearly independent:
// a dependent row keeps its artificial basic and, in floating mode, can
// leave a spurious phase-I residual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "svamp/rational.hpp"

namespace svamp {

template <class Scalar>
struct ScalarOps;

template <>
struct ScalarOps<double> {
  static constexpr double kTol = 1e-9;
  static int sign(double v) { return v > kTol ? 1 : (v < -kTol ? -1 : 0); }
  static bool is_zero(double v) { return std::abs(v) <= kTol; }
  static double magnitude(double v) { return std::abs(v); }
};

template <>
struct ScalarOps<Rational> {
  static int sign(const Rational& v) { return sgn(v); }
  static bool is_zero(const Rational& v) { return sgn(v) == 0; }
  static double magnitude(const Rational& v) { return std::abs(v.get_d()); }
};

template <class Scalar>
struct MatrixEntry {
  std::size_t row;
  std::size_t col;
  Scalar value;
};

template <class Scalar>
struct StandardFormLp {
  std::size_t num_rows = 0;
  std::size_t num_cols = 0;
  std::vector<MatrixEntry<Scalar>> entries;
  std::vector<Scalar> rhs;   // size num_rows, nonnegative
  std::vector<Scalar> cost;  // size num_cols
};

enum class SimplexStatus { kOptimal, kInfeasible, kUnbounded, kPivotLimit };

template <class Scalar>
struct SimplexResult {
  SimplexStatus status = SimplexStatus::kPivotLimit;
  Scalar objective{};
  std::vector<Scalar> primal;         // size num_cols
  std::vector<Scalar> row_duals;      // size num_rows
  std::vector<Scalar> reduced_costs;  // size num_cols
  std::vector<std::size_t> basis;     // basic column per row; >= num_cols is an artificial
  std::size_t pivots = 0;
  bool warm_started = false;
};

enum class PivotRule {
  /// Smallest-index entering and leaving variables throughout.
  kBland,
  /// Most negative reduced cost, with Bland's rule inside runs of degenerate
  /// pivots. Finite: Bland cannot cycle within a degenerate run and each
  /// nondegenerate pivot strictly decreases the objective.
  kDantzigBlandFallback,
};

struct SimplexOptions {
  std::size_t max_pivots = 200000;
  PivotRule rule = PivotRule::kDantzigBlandFallback;
  /// Consecutive degenerate pivots before Bland's rule takes over.
  std::size_t degenerate_streak = 32;
  /// Columns pivoted into the basis before phase I. A crash that ends
  /// primal infeasible is discarded and the solve restarts cold.
  std::vector<std::size_t> crash_basis;
};

template <class Scalar>
class TableauSimplex {
 public:
  using Ops = ScalarOps<Scalar>;

  explicit TableauSimplex(const StandardFormLp<Scalar>& lp)
      : m_(lp.num_rows),
        n_(lp.num_cols),
        width_(lp.num_cols + lp.num_rows + 1),
        entries_(lp.entries),
        true_rhs_(lp.rhs),
        cost_(lp.cost) {
    if (lp.rhs.size() != m_ || lp.cost.size() != n_)
      throw std::invalid_argument("simplex: rhs/cost dimension mismatch");
    rows_.assign(m_, std::vector<Scalar>(width_, Scalar(0)));
    for (const auto& e : lp.entries) {
      if (e.row >= m_ || e.col >= n_) throw std::out_of_range("simplex: matrix entry out of range");
      rows_[e.row][e.col] += e.value;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (Ops::sign(lp.rhs[i]) < 0) throw std::invalid_argument("simplex: rhs must be nonnegative");
      rows_[i][n_ + i] = 1;
      rows_[i][rhs_col()] = lp.rhs[i];
    }
    basis_.resize(m_);
    basic_flag_.assign(n_ + m_, false);
    for (std::size_t i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      basic_flag_[n_ + i] = true;
    }
    phase1_.assign(width_, Scalar(0));
    phase2_.assign(width_, Scalar(0));
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j)
        if (!Ops::is_zero(rows_[i][j])) phase1_[j] -= rows_[i][j];
      phase1_[rhs_col()] -= rows_[i][rhs_col()];
    }
    for (std::size_t j = 0; j < n_; ++j) phase2_[j] = lp.cost[j];
  }

  /// Pivots the given columns in regardless of sign. Returns false when the
  /// resulting basic solution has a negative component.
  bool crash(const std::vector<std::size_t>& columns) {
    for (std::size_t col : columns) {
      if (col >= n_ || basic_flag_[col]) continue;
      if (auto row = pick_artificial_row(col)) pivot(*row, col, /*clamp=*/false);
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (Ops::sign(rows_[i][rhs_col()]) < 0) return false;
      if constexpr (std::is_same_v<Scalar, double>) rows_[i][rhs_col()] = std::max(rows_[i][rhs_col()], 0.0);
    }
    return true;
  }

  SimplexResult<Scalar> solve(const SimplexOptions& options) {
    SimplexResult<Scalar> result;

    auto status = iterate(phase1_, options);
    if (status == SimplexStatus::kPivotLimit) return finish(result, status);
    if (Ops::sign(-phase1_[rhs_col()]) > 0) return finish(result, SimplexStatus::kInfeasible);

    // Zero-level artificials leave where a structural column allows it.
    // Rows where none does are dependent and keep their artificial.
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      std::optional<std::size_t> col;
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_flag_[j] || Ops::is_zero(rows_[i][j])) continue;
        if (!col || Ops::magnitude(rows_[i][j]) > Ops::magnitude(rows_[i][*col])) col = j;
        if constexpr (std::is_same_v<Scalar, Rational>) break;
      }
      if (col) pivot(i, *col);
    }

    return finish(result, iterate(phase2_, options));
  }

 private:
  std::size_t rhs_col() const { return width_ - 1; }

  std::optional<std::size_t> pick_artificial_row(std::size_t col) const {
    std::optional<std::size_t> row;
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_ || Ops::is_zero(rows_[i][col])) continue;
      if (!row || Ops::magnitude(rows_[i][col]) > Ops::magnitude(rows_[*row][col])) row = i;
      if constexpr (std::is_same_v<Scalar, Rational>) break;
    }
    return row;
  }

  // Artificial columns never re-enter the basis.
  SimplexStatus iterate(std::vector<Scalar>& objective, const SimplexOptions& options) {
    std::size_t streak = 0;
    while (true) {
      if (pivots_ >= options.max_pivots) return SimplexStatus::kPivotLimit;
      const bool bland = options.rule == PivotRule::kBland || streak >= options.degenerate_streak;
      std::optional<std::size_t> entering;
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_flag_[j] || Ops::sign(objective[j]) >= 0) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (!entering || objective[j] < objective[*entering]) entering = j;
      }
      if (!entering) return SimplexStatus::kOptimal;
      const std::size_t s = *entering;

      const auto leaving = ratio_test(s, bland);
      if (!leaving) return SimplexStatus::kUnbounded;
      streak = Ops::is_zero(rows_[*leaving][rhs_col()]) ? streak + 1 : 0;
      pivot(*leaving, s);
    }
  }

  // Leaving row for entering column s. Exact mode uses the textbook
  // minimum ratio. Floating mode uses Harris' two-pass test: the step may
  // overshoot by kTol so that a larger pivot element can be chosen, and
  // elements below kPivotTol are never pivoted on.
  std::optional<std::size_t> ratio_test(std::size_t s, bool bland) const {
    std::optional<std::size_t> leaving;
    auto better = [&](std::size_t i) {
      return bland ? basis_[i] < basis_[*leaving] : Ops::magnitude(rows_[i][s]) > Ops::magnitude(rows_[*leaving][s]);
    };
    if constexpr (std::is_same_v<Scalar, Rational>) {
      Rational best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (sgn(rows_[i][s]) <= 0) continue;
        Rational ratio = rows_[i][rhs_col()] / rows_[i][s];
        const int cmp = leaving ? cmp_ratio(ratio, best) : -1;
        if (cmp < 0 || (cmp == 0 && better(i))) {
          leaving = i;
          best = std::move(ratio);
        }
      }
    } else {
      constexpr double kPivotTol = 1e-7;
      double theta = INFINITY;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = rows_[i][s];
        if (a > kPivotTol) theta = std::min(theta, (std::max(rows_[i][rhs_col()], 0.0) + Ops::kTol) / a);
      }
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = rows_[i][s];
        if (a <= kPivotTol || std::max(rows_[i][rhs_col()], 0.0) / a > theta) continue;
        if (!leaving || better(i)) leaving = i;
      }
    }
    return leaving;
  }

  static int cmp_ratio(const Rational& a, const Rational& b) { return cmp(a, b); }

  static void eliminate(std::vector<Scalar>& row, std::size_t s, const std::vector<Scalar>& pivot_row,
                        const std::vector<std::size_t>& nz) {
    if (Ops::is_zero(row[s])) {
      row[s] = 0;
      return;
    }
    const Scalar factor = row[s];
    for (std::size_t j : nz) row[j] -= factor * pivot_row[j];
    row[s] = 0;
  }

  // Floating pivots clamp tiny negative right-hand sides to zero; a crash
  // must not, or an infeasible warm basis would pass as feasible.
  void pivot(std::size_t r, std::size_t s, bool clamp = true) {
    auto& prow = rows_[r];
    const Scalar inv = Scalar(1) / prow[s];
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < width_; ++j) {
      if (Ops::is_zero(prow[j])) {
        prow[j] = 0;
        continue;
      }
      prow[j] *= inv;
      nz.push_back(j);
    }
    prow[s] = 1;
    for (std::size_t i = 0; i < m_; ++i)
      if (i != r) eliminate(rows_[i], s, prow, nz);
    eliminate(phase1_, s, prow, nz);
    eliminate(phase2_, s, prow, nz);

    if constexpr (std::is_same_v<Scalar, double>) {
      if (clamp)
        for (auto& row : rows_)
          if (row[rhs_col()] < 0.0) row[rhs_col()] = 0.0;
    }
    basic_flag_[basis_[r]] = false;
    basic_flag_[s] = true;
    basis_[r] = s;
    ++pivots_;
  }

  SimplexResult<Scalar>& finish(SimplexResult<Scalar>& result, SimplexStatus status) {
    result.status = status;
    result.pivots = pivots_;
    result.basis = basis_;
    if (status != SimplexStatus::kOptimal) return result;
    result.primal.assign(n_, Scalar(0));
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) result.primal[basis_[i]] = rows_[i][rhs_col()];
    result.row_duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) result.row_duals[i] = -phase2_[n_ + i];
    if constexpr (std::is_same_v<Scalar, double>) {
      // One step of iterative refinement on x_B against the original rows,
      // and reduced costs recomputed from the original columns.
      std::vector<double> residual(true_rhs_);
      for (const auto& e : entries_) residual[e.row] -= e.value * result.primal[e.col];
      for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] >= n_) continue;
        double dx = 0.0;
        for (std::size_t k = 0; k < m_; ++k) dx += rows_[i][n_ + k] * residual[k];
        result.primal[basis_[i]] += dx;
      }
      result.reduced_costs = cost_;
      for (const auto& e : entries_) result.reduced_costs[e.col] -= e.value * result.row_duals[e.row];
      result.objective = 0.0;
      for (std::size_t j = 0; j < n_; ++j) result.objective += cost_[j] * result.primal[j];
    } else {
      result.objective = -phase2_[rhs_col()];
      result.reduced_costs.assign(phase2_.begin(), phase2_.begin() + static_cast<std::ptrdiff_t>(n_));
    }
    return result;
  }

  std::size_t m_;
  std::size_t n_;
  std::size_t width_;
  std::vector<MatrixEntry<Scalar>> entries_;
  std::vector<Scalar> true_rhs_;
  std::vector<Scalar> cost_;
  std::vector<std::vector<Scalar>> rows_;
  std::vector<Scalar> phase1_;
  std::vector<Scalar> phase2_;
  std::vector<std::size_t> basis_;
  std::vector<bool> basic_flag_;
  std::size_t pivots_ = 0;
};

template <class Scalar>
SimplexResult<Scalar> solve_simplex(const StandardFormLp<Scalar>& lp, const SimplexOptions& options = {}) {
  if (!options.crash_basis.empty()) {
    TableauSimplex<Scalar> warm(lp);
    if (warm.crash(options.crash_basis)) {
      auto r = warm.solve(options);
      r.warm_started = true;
      return r;
    }
  }
  TableauSimplex<Scalar> cold(lp);
  return cold.solve(options);
}

}  // namespace svamp
