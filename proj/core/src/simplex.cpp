#include "pipelat/simplex.hpp"

#include <optional>
#include <stdexcept>

namespace pipelat {

namespace {

struct Tableau {
  std::vector<std::vector<Rational>> rows;  // each row: columns..., rhs
  std::vector<std::size_t> basis;
  std::size_t cols = 0;

  const Rational& rhs(std::size_t r) const { return rows[r][cols]; }

  void pivot(std::size_t r, std::size_t c) {
    Rational p = rows[r][c];
    for (Rational& v : rows[r]) v /= p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      Rational factor = rows[i][c];
      for (std::size_t j = 0; j <= cols; ++j) rows[i][j] -= factor * rows[r][j];
    }
    basis[r] = c;
  }
};

enum class LoopResult { optimal, unbounded };

// Maximizes obj over the current basic feasible solution using Bland's rule.
LoopResult optimize(Tableau& t, const std::vector<Rational>& obj, const std::vector<bool>& allowed) {
  for (;;) {
    std::optional<std::size_t> entering;
    for (std::size_t j = 0; j < t.cols && !entering; ++j) {
      if (!allowed[j]) continue;
      Rational reduced = obj[j];
      for (std::size_t i = 0; i < t.rows.size(); ++i) reduced -= obj[t.basis[i]] * t.rows[i][j];
      if (reduced > 0) entering = j;
    }
    if (!entering) return LoopResult::optimal;

    std::optional<std::size_t> leaving;
    Rational best_ratio;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const Rational& a = t.rows[i][*entering];
      if (a <= 0) continue;
      Rational ratio = t.rhs(i) / a;
      if (!leaving || ratio < best_ratio || (ratio == best_ratio && t.basis[i] < t.basis[*leaving])) {
        leaving = i;
        best_ratio = ratio;
      }
    }
    if (!leaving) return LoopResult::unbounded;
    t.pivot(*leaving, *entering);
  }
}

}  // namespace

RationalSimplex::RationalSimplex(std::size_t variables) : n_(variables), c_(variables, Rational(0)) {}

void RationalSimplex::add_row(std::vector<Rational> coefficients, Rational bound) {
  if (coefficients.size() != n_) throw std::invalid_argument("RationalSimplex::add_row: wrong row width");
  A_.push_back(std::move(coefficients));
  b_.push_back(std::move(bound));
}

void RationalSimplex::set_objective(std::vector<Rational> coefficients) {
  if (coefficients.size() != n_) throw std::invalid_argument("RationalSimplex::set_objective: wrong width");
  c_ = std::move(coefficients);
}

LpSolution RationalSimplex::solve() const {
  const std::size_t m = A_.size();
  std::size_t artificial_count = 0;
  for (const Rational& b : b_)
    if (b < 0) ++artificial_count;

  // Columns: originals [0, n), slacks [n, n+m), artificials after.
  Tableau t;
  t.cols = n_ + m + artificial_count;
  t.rows.assign(m, std::vector<Rational>(t.cols + 1, Rational(0)));
  t.basis.assign(m, 0);
  std::size_t next_artificial = n_ + m;
  for (std::size_t i = 0; i < m; ++i) {
    const bool flip = b_[i] < 0;
    const int sign = flip ? -1 : 1;
    for (std::size_t j = 0; j < n_; ++j) t.rows[i][j] = sign * A_[i][j];
    t.rows[i][n_ + i] = sign;
    t.rows[i][t.cols] = sign * b_[i];
    if (flip) {
      t.rows[i][next_artificial] = 1;
      t.basis[i] = next_artificial++;
    } else {
      t.basis[i] = n_ + i;
    }
  }

  std::vector<bool> allowed(t.cols, true);
  if (artificial_count > 0) {
    std::vector<Rational> phase1(t.cols, Rational(0));
    for (std::size_t j = n_ + m; j < t.cols; ++j) phase1[j] = -1;
    optimize(t, phase1, allowed);
    Rational infeasibility = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (t.basis[i] >= n_ + m) infeasibility += t.rhs(i);
    if (infeasibility != 0) return LpSolution{LpStatus::infeasible, {}, 0};

    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] < n_ + m) continue;
      for (std::size_t j = 0; j < n_ + m; ++j) {
        if (t.rows[i][j] != 0) {
          t.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = n_ + m; j < t.cols; ++j) allowed[j] = false;
  }

  std::vector<Rational> phase2(t.cols, Rational(0));
  for (std::size_t j = 0; j < n_; ++j) phase2[j] = c_[j];
  if (optimize(t, phase2, allowed) == LoopResult::unbounded) return LpSolution{LpStatus::unbounded, {}, 0};

  LpSolution out;
  out.status = LpStatus::optimal;
  out.x.assign(n_, Rational(0));
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] < n_) out.x[t.basis[i]] = t.rhs(i);
  for (std::size_t j = 0; j < n_; ++j) out.objective += c_[j] * out.x[j];
  return out;
}

}  // namespace pipelat
