#pragma once

#include "pipelat/rational.hpp"

#include <vector>

namespace pipelat {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<Rational> x;
  Rational objective{0};
};

/// maximize c.x  subject to  A x <= b,  x >= 0.
///
/// Dense two-phase tableau simplex over exact rationals with Bland's rule,
/// so it terminates on degenerate problems. Sized for the handful of period
/// variables a task graph produces, not for large LPs.
class RationalSimplex {
 public:
  explicit RationalSimplex(std::size_t variables);

  void add_row(std::vector<Rational> coefficients, Rational bound);
  void set_objective(std::vector<Rational> coefficients);

  std::size_t variables() const { return n_; }
  std::size_t rows() const { return A_.size(); }

  LpSolution solve() const;

 private:
  std::size_t n_;
  std::vector<std::vector<Rational>> A_;
  std::vector<Rational> b_;
  std::vector<Rational> c_;
};

}  // namespace pipelat
