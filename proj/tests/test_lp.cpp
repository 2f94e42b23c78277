#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "polyflow/lp.hpp"
#include "polyflow/rng.hpp"

using namespace polyflow;
using namespace polyflow::opt;

namespace {

// Brute-force oracle: enumerate all candidate vertices (every choice of n
// active constraints among rows and bounds), keep the feasible ones, take the
// best objective. Independent of the simplex path.
double vertex_enumeration_min(const LinearProgram& lp) {
  const int n = lp.cols();
  struct HalfSpace {
    Vec a;
    double b;
  };
  std::vector<HalfSpace> hs;
  for (const auto& row : lp.rows) {
    Vec a = Vec::Zero(n);
    for (const auto& [j, v] : row.coef) a(j) = v;
    hs.push_back({a, row.rhs});
  }
  for (int j = 0; j < n; ++j) {
    Vec a = Vec::Zero(n);
    a(j) = 1.0;
    hs.push_back({a, lp.up(j)});
    a(j) = -1.0;
    hs.push_back({a, -lp.lo(j)});
  }
  const int m = static_cast<int>(hs.size());
  double best = kInf;

  // Iterative combination enumeration.
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  while (true) {
    Mat a(n, n);
    Vec b(n);
    for (int i = 0; i < n; ++i) {
      a.row(i) = hs[static_cast<size_t>(idx[static_cast<size_t>(i)])].a.transpose();
      b(i) = hs[static_cast<size_t>(idx[static_cast<size_t>(i)])].b;
    }
    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() == n) {
      const Vec x = lu.solve(b);
      bool feasible = x.allFinite();
      for (int k = 0; feasible && k < m; ++k)
        if (hs[static_cast<size_t>(k)].a.dot(x) > hs[static_cast<size_t>(k)].b + 1e-7)
          feasible = false;
      if (feasible) best = std::min(best, lp.c.dot(x));
    }
    // next combination
    int pos = n - 1;
    while (pos >= 0 && idx[static_cast<size_t>(pos)] == m - n + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<size_t>(pos)];
    for (int k = pos + 1; k < n; ++k)
      idx[static_cast<size_t>(k)] = idx[static_cast<size_t>(k - 1)] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("scalar minimum against a row bound") {
  LinearProgram lp;
  lp.add_col("x", -kInf, kInf, 1.0);
  lp.add_row({{0, -1.0}}, RowSense::LE, -1.0);  // x >= 1
  const auto res = simplex_solve(lp);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("box maximum") {
  LinearProgram lp;
  lp.add_col("x1", 0.0, 1.0, -1.0);
  lp.add_col("x2", 0.0, 1.0, -1.0);
  const auto res = simplex_solve(lp);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-2.0));
  CHECK(res.x(0) == doctest::Approx(1.0));
  CHECK(res.x(1) == doctest::Approx(1.0));
}

TEST_CASE("equality rows and infeasibility certificates") {
  LinearProgram lp;
  lp.add_col("x", -10.0, 10.0, 1.0);
  lp.add_col("y", -10.0, 10.0, 0.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::EQ, 3.0);
  lp.add_row({{0, 1.0}, {1, -1.0}}, RowSense::EQ, 1.0);
  const auto res = simplex_solve(lp);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.x(0) == doctest::Approx(2.0));
  CHECK(res.x(1) == doctest::Approx(1.0));

  LinearProgram bad;
  bad.add_col("x", 0.0, kInf, 0.0);
  bad.add_row({{0, 1.0}}, RowSense::LE, -1.0);  // x <= -1 with x >= 0
  CHECK(simplex_solve(bad).status == LpStatus::Infeasible);

  LinearProgram inf2;
  inf2.add_col("x", -kInf, kInf, 0.0);
  inf2.add_row({{0, 1.0}}, RowSense::LE, 0.0);   // x <= 0
  inf2.add_row({{0, -1.0}}, RowSense::LE, -1.0); // x >= 1
  CHECK(simplex_solve(inf2).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded detection") {
  LinearProgram lp;
  lp.add_col("x", 0.0, kInf, -1.0);
  const auto res = simplex_solve(lp);
  CHECK(res.status == LpStatus::Unbounded);

  LinearProgram free_col;
  free_col.add_col("x", -kInf, kInf, 1.0);
  CHECK(simplex_solve(free_col).status == LpStatus::Unbounded);
}

TEST_CASE("random bounded programs match vertex enumeration") {
  Rng rng(101);
  int solved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));   // up to 6
    const int m = 3 + static_cast<int>(rng.below(8));   // up to 10
    LinearProgram lp;
    Vec x0(n);
    for (int j = 0; j < n; ++j) {
      const double lo = rng.uniform(-3.0, 0.0);
      const double hi = lo + rng.uniform(0.5, 4.0);
      lp.add_col("x" + std::to_string(j), lo, hi, rng.uniform(-2.0, 2.0));
      x0(j) = rng.uniform(lo, hi);
    }
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> row;
      Vec a = Vec::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (rng.next_unit() < 0.7) {
          a(j) = rng.uniform(-2.0, 2.0);
          row.push_back({j, a(j)});
        }
      }
      // Keep x0 feasible so the instance always has a solution.
      lp.add_row(std::move(row), RowSense::LE, a.dot(x0) + rng.uniform(0.0, 2.0));
    }
    const double oracle = vertex_enumeration_min(lp);
    const auto res = simplex_solve(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(std::abs(res.objective - oracle) <= 1e-8 * std::max(1.0, std::abs(oracle)));
    ++solved;
  }
  CHECK(solved == 100);
}

TEST_CASE("warm restart after bound changes") {
  LinearProgram lp;
  lp.add_col("x", 0.0, 1.0, -1.0);
  lp.add_col("y", 0.0, 1.0, -0.5);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::LE, 1.5);
  SimplexSolver solver(lp);
  auto r1 = solver.solve();
  REQUIRE(r1.status == LpStatus::Optimal);
  CHECK(r1.objective == doctest::Approx(-1.25));

  solver.set_bounds(0, 0.0, 0.0);  // forbid x
  auto r2 = solver.solve();
  REQUIRE(r2.status == LpStatus::Optimal);
  CHECK(r2.objective == doctest::Approx(-0.5));

  solver.set_bounds(0, 0.0, 1.0);  // restore
  auto r3 = solver.solve();
  REQUIRE(r3.status == LpStatus::Optimal);
  CHECK(r3.objective == doctest::Approx(-1.25));
}
