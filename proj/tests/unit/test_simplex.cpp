#include "doctest.h"
#include "pipelat/simplex.hpp"

#include <optional>
#include <random>

using namespace pipelat;

namespace {

using Matrix = std::vector<std::vector<Rational>>;

std::optional<std::vector<Rational>> solve_square(Matrix a, std::vector<Rational> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) return std::nullopt;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<Rational> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

// Best objective over all basic feasible points; nullopt if none exist.
std::optional<Rational> vertex_oracle(const Matrix& A, const std::vector<Rational>& b, const std::vector<Rational>& c) {
  const std::size_t n = c.size();
  Matrix rows = A;
  std::vector<Rational> rhs = b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Rational> r(n, Rational(0));
    r[i] = -1;
    rows.push_back(r);
    rhs.push_back(0);
  }
  std::optional<Rational> best;
  const std::size_t m = rows.size();
  std::vector<std::size_t> pick(n);
  auto visit = [&](auto&& self, std::size_t depth, std::size_t from) -> void {
    if (depth == n) {
      Matrix sq;
      std::vector<Rational> sb;
      for (std::size_t k : pick) {
        sq.push_back(rows[k]);
        sb.push_back(rhs[k]);
      }
      auto x = solve_square(sq, sb);
      if (!x) return;
      for (std::size_t r = 0; r < m; ++r) {
        Rational lhs = 0;
        for (std::size_t j = 0; j < n; ++j) lhs += rows[r][j] * (*x)[j];
        if (lhs > rhs[r]) return;
      }
      Rational value = 0;
      for (std::size_t j = 0; j < n; ++j) value += c[j] * (*x)[j];
      if (!best || value > *best) best = value;
      return;
    }
    for (std::size_t k = from; k < m; ++k) {
      pick[depth] = k;
      self(self, depth + 1, k + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

}  // namespace

TEST_SUITE("simplex") {
  TEST_CASE("textbook maximum") {
    RationalSimplex lp(2);
    lp.add_row({1, 1}, 4);
    lp.add_row({1, 3}, 6);
    lp.set_objective({3, 2});
    LpSolution s = lp.solve();
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == 12);
    CHECK(s.x == std::vector<Rational>{4, 0});
  }

  TEST_CASE("fractional optimum stays exact") {
    RationalSimplex lp(2);
    lp.add_row({3, 1}, 7);
    lp.add_row({1, 2}, 4);
    lp.set_objective({1, 1});
    LpSolution s = lp.solve();
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x == std::vector<Rational>{2, 1});
    lp.set_objective({1, 3});
    CHECK(lp.solve().objective == 6);
  }

  TEST_CASE("negative right-hand sides need phase one") {
    RationalSimplex lp(2);
    lp.add_row({-1, 0}, -3);  // x >= 3
    lp.add_row({0, -1}, -2);  // y >= 2
    lp.add_row({1, 1}, 10);
    lp.set_objective({1, 2});
    LpSolution s = lp.solve();
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == 17);
    CHECK(s.x == std::vector<Rational>{3, 7});
  }

  TEST_CASE("infeasible and unbounded") {
    RationalSimplex bad(1);
    bad.add_row({1}, 1);
    bad.add_row({-1}, -2);
    bad.set_objective({1});
    CHECK(bad.solve().status == LpStatus::infeasible);

    RationalSimplex open(2);
    open.add_row({1, -1}, 1);
    open.set_objective({1, 1});
    CHECK(open.solve().status == LpStatus::unbounded);
  }

  TEST_CASE("degenerate vertices terminate") {
    RationalSimplex lp(3);
    lp.add_row({1, 1, 0}, 0);
    lp.add_row({0, 1, 1}, 0);
    lp.add_row({1, 0, 1}, 0);
    lp.add_row({1, 1, 1}, 5);
    lp.set_objective({1, 1, 1});
    LpSolution s = lp.solve();
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == 0);
  }

  TEST_CASE("property: optimum matches vertex enumeration") {
    std::mt19937_64 rng(2024);
    auto coef = [&](int lo, int hi) { return Rational(std::uniform_int_distribution<int>(lo, hi)(rng)); };
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 250; ++trial) {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
      const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
      Matrix A;
      std::vector<Rational> b;
      for (std::size_t r = 0; r < m; ++r) {
        std::vector<Rational> row;
        for (std::size_t j = 0; j < n; ++j) row.push_back(coef(-4, 4) / coef(1, 3));
        A.push_back(row);
        b.push_back(coef(-6, 12));
      }
      for (std::size_t j = 0; j < n; ++j) {  // box keeps every problem bounded
        std::vector<Rational> row(n, Rational(0));
        row[j] = 1;
        A.push_back(row);
        b.push_back(coef(1, 20));
      }
      std::vector<Rational> c;
      for (std::size_t j = 0; j < n; ++j) c.push_back(coef(-3, 5));

      RationalSimplex lp(n);
      for (std::size_t r = 0; r < A.size(); ++r) lp.add_row(A[r], b[r]);
      lp.set_objective(c);
      LpSolution s = lp.solve();
      std::optional<Rational> expected = vertex_oracle(A, b, c);
      if (!expected) {
        ++infeasible;
        CHECK(s.status == LpStatus::infeasible);
        continue;
      }
      ++feasible;
      REQUIRE(s.status == LpStatus::optimal);
      CHECK(s.objective == *expected);
      for (std::size_t r = 0; r < A.size(); ++r) {
        Rational lhs = 0;
        for (std::size_t j = 0; j < n; ++j) lhs += A[r][j] * s.x[j];
        CHECK(lhs <= b[r]);
      }
      for (const Rational& v : s.x) CHECK(v >= 0);
    }
    CHECK(feasible > 50);
    CHECK(infeasible > 0);
  }
}
