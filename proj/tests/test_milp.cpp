#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "polyflow/milp.hpp"
#include "polyflow/rng.hpp"

using namespace polyflow;
using namespace polyflow::opt;

namespace {

// Exhaustive oracle: solve the remaining linear program for every binary
// assignment and keep the best objective.
double enumerate_milp(const MilpModel& model) {
  const int nb = static_cast<int>(model.binaries.size());
  double best = kInf;
  SimplexSolver solver(model.lp);
  for (long mask = 0; mask < (1L << nb); ++mask) {
    for (int k = 0; k < nb; ++k) {
      const double v = (mask >> k) & 1 ? 1.0 : 0.0;
      solver.set_bounds(model.binaries[static_cast<size_t>(k)], v, v);
    }
    const auto res = solver.solve();
    if (res.status == LpStatus::Optimal) best = std::min(best, res.objective);
  }
  return best;
}

nn::MlpParams abs_net() {
  nn::MlpParams p;
  Mat w1(2, 1);
  w1 << 1.0, -1.0;
  p.w = {w1};
  p.b = {Vec::Zero(2)};
  p.w_out = Vec(2);
  p.w_out << 1.0, 1.0;
  p.b_out = 0.0;
  p.scaler = nn::InputScaler::identity(1);
  return p;
}

pwl::Polytope interval(double lo, double hi) {
  pwl::Polytope p;
  p.a = Mat(2, 1);
  p.a << 1.0, -1.0;
  p.beta = Vec(2);
  p.beta << hi, -lo;
  p.origins = {{pwl::RowKind::Neuron, 0, 0}, {pwl::RowKind::Neuron, 0, 1}};
  return p;
}

}  // namespace

TEST_CASE("integral relaxations solve at the root") {
  MilpModel m;
  m.lp.add_col("x", 0.0, 1.0, -1.0);
  m.binaries = {0};
  BnbOptions opts;
  opts.root_dive = false;
  const auto res = branch_and_bound(m, opts);
  REQUIRE(res.status == MilpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-1.0));
  CHECK(res.x(0) == doctest::Approx(1.0));
  CHECK(res.nodes == 1);
}

TEST_CASE("branching resolves fractional relaxations") {
  // Relaxation prefers x = y = 0.5; integrality forces a corner.
  MilpModel m;
  m.lp.add_col("x", 0.0, 1.0, -1.0);
  m.lp.add_col("y", 0.0, 1.0, -1.0);
  m.lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::LE, 1.0);
  m.binaries = {0, 1};
  const auto res = branch_and_bound(m);
  REQUIRE(res.status == MilpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-1.0));
  CHECK(std::abs(res.x(0) - std::round(res.x(0))) <= 1e-6);
  CHECK(std::abs(res.x(1) - std::round(res.x(1))) <= 1e-6);
}

TEST_CASE("random instances match exhaustive enumeration") {
  Rng rng(303);
  for (int trial = 0; trial < 60; ++trial) {
    const int nb = 2 + static_cast<int>(rng.below(7));  // up to 8 binaries here
    const int nc = 1 + static_cast<int>(rng.below(6));
    const int rows = 2 + static_cast<int>(rng.below(8));
    MilpModel m;
    Vec x0(nb + nc);
    for (int k = 0; k < nb; ++k) {
      m.binaries.push_back(m.lp.add_col("b" + std::to_string(k), 0.0, 1.0, rng.uniform(-2.0, 2.0)));
      x0(k) = rng.below(2) ? 1.0 : 0.0;
    }
    for (int k = 0; k < nc; ++k) {
      const double lo = rng.uniform(-2.0, 0.0);
      const double hi = lo + rng.uniform(0.5, 3.0);
      m.lp.add_col("x" + std::to_string(k), lo, hi, rng.uniform(-2.0, 2.0));
      x0(nb + k) = rng.uniform(lo, hi);
    }
    for (int i = 0; i < rows; ++i) {
      std::vector<std::pair<int, double>> row;
      Vec a = Vec::Zero(nb + nc);
      for (int j = 0; j < nb + nc; ++j)
        if (rng.next_unit() < 0.6) {
          a(j) = rng.uniform(-2.0, 2.0);
          row.push_back({j, a(j)});
        }
      m.lp.add_row(std::move(row), RowSense::LE, a.dot(x0) + rng.uniform(0.0, 1.5));
    }
    const double oracle = enumerate_milp(m);
    const auto res = branch_and_bound(m);
    REQUIRE(res.status == MilpStatus::Optimal);
    CHECK(std::abs(res.objective - oracle) <= 1e-6);
  }
}

TEST_CASE("activation bound propagation") {
  // Identity neuron over [-1, 1].
  nn::MlpParams one;
  one.w = {Mat::Ones(1, 1)};
  one.b = {Vec::Zero(1)};
  one.w_out = Vec::Ones(1);
  one.scaler = nn::InputScaler::identity(1);
  data::DomainBox box;
  box.lo = Vec::Constant(1, -1.0);
  box.hi = Vec::Constant(1, 1.0);
  const Vec m = big_m_bounds(one, box);
  CHECK(m(0) == doctest::Approx(1.0 + 1e-6));

  // Zero weights: the bound collapses to the bias magnitude.
  nn::MlpParams zb;
  zb.w = {Mat::Zero(2, 1)};
  Vec b(2);
  b << 0.75, -0.25;
  zb.b = {b};
  zb.w_out = Vec::Zero(2);
  zb.scaler = nn::InputScaler::identity(1);
  const Vec mz = big_m_bounds(zb, box);
  CHECK(mz(0) == doctest::Approx(0.75 + 1e-6));
  CHECK(mz(1) == doctest::Approx(0.25 + 1e-6));

  // Validity: no activation magnitude ever exceeds its bound.
  Rng rng(11);
  nn::MlpParams p;
  p.w = {Mat(4, 2), Mat(3, 4)};
  p.b = {Vec(4), Vec(3)};
  for (auto& w : p.w)
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-1.5, 1.5);
  for (auto& bv : p.b)
    for (int r = 0; r < bv.size(); ++r) bv(r) = rng.uniform(-0.5, 0.5);
  p.w_out = Vec::Ones(3);
  p.scaler = nn::InputScaler::identity(2);
  data::DomainBox box2;
  box2.lo = Vec::Constant(2, -1.0);
  box2.hi = Vec::Constant(2, 1.5);
  const Vec mm = big_m_bounds(p, box2);
  for (int k = 0; k < 1000; ++k) {
    Vec x(2);
    x << rng.uniform(-1.0, 1.5), rng.uniform(-1.0, 1.5);
    const auto t = nn::forward_trace(p, x);
    int at = 0;
    for (const auto& z : t.z)
      for (int i = 0; i < z.size(); ++i) CHECK(std::abs(z(i)) <= mm(at++));
  }

  data::DomainBox open;
  open.lo = Vec::Constant(1, -kInf);
  open.hi = Vec::Constant(1, 1.0);
  CHECK_THROWS(big_m_bounds(one, open));
}

TEST_CASE("network encoding admits exactly the forward pass") {
  const auto net = abs_net();
  data::DomainBox box;
  box.lo = Vec::Constant(1, -4.0);
  box.hi = Vec::Constant(1, 4.0);
  const Vec m = big_m_bounds(net, box);

  MilpModel model;
  const int x = model.lp.add_col("x", -4.0, -3.0, 0.0);
  const int out = model.lp.add_col("out", -kInf, kInf, 0.0);
  const auto enc = encode_mlp_bigm(model, net, {x}, out, m);
  CHECK(enc.binary_cols.size() == 2);  // one selector per neuron

  // Fix x = -3 and minimize the output: the only consistent completion
  // has the negative side active and the output equal to 3.
  model.lp.lo(x) = -3.0;
  model.lp.up(x) = -3.0;
  model.lp.set_cost(out, 1.0);
  const auto res_min = branch_and_bound(model);
  REQUIRE(res_min.status == MilpStatus::Optimal);
  CHECK(res_min.x(out) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(res_min.x(enc.binary_cols[0]) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(res_min.x(enc.binary_cols[1]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res_min.x(enc.unit_cols[0]) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(res_min.x(enc.unit_cols[1]) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(res_min.x(enc.slack_cols[0]) == doctest::Approx(3.0).epsilon(1e-7));

  // Maximizing gives the same value: the encoding pins the output.
  model.lp.set_cost(out, -1.0);
  const auto res_max = branch_and_bound(model);
  REQUIRE(res_max.status == MilpStatus::Optimal);
  CHECK(res_max.x(out) == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("encoded output tracks the forward pass at solver optima") {
  Rng rng(19);
  nn::MlpParams p;
  p.w = {Mat(3, 2), Mat(3, 3)};
  p.b = {Vec(3), Vec(3)};
  for (auto& w : p.w)
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-1.0, 1.0);
  for (auto& bv : p.b)
    for (int r = 0; r < bv.size(); ++r) bv(r) = rng.uniform(-0.3, 0.3);
  p.w_out = Vec(3);
  p.w_out << 0.8, -0.6, 0.4;
  p.b_out = 0.1;
  p.scaler = nn::InputScaler::identity(2);

  data::DomainBox box;
  box.lo = Vec::Constant(2, -1.0);
  box.hi = Vec::Constant(2, 1.0);
  const Vec m = big_m_bounds(p, box);

  for (int probe = 0; probe < 20; ++probe) {
    Vec x0(2);
    x0 << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    MilpModel model;
    const int x1 = model.lp.add_col("x1", x0(0), x0(0), 0.0);
    const int x2 = model.lp.add_col("x2", x0(1), x0(1), 0.0);
    const int out = model.lp.add_col("out", -kInf, kInf, 1.0);
    encode_mlp_bigm(model, p, {x1, x2}, out, m);
    const auto res = branch_and_bound(model);
    REQUIRE(res.status == MilpStatus::Optimal);
    CHECK(std::abs(res.x(out) - nn::forward(p, x0)) <= 1e-6);
  }
}

TEST_CASE("union of intervals") {
  const std::vector<pwl::Polytope> segs = {interval(0.0, 1.0), interval(2.0, 3.0)};

  MilpModel m1;
  const int x1 = m1.lp.add_col("x", -10.0, 10.0, 1.0);
  const auto enc = encode_region_union(m1, segs, {x1}, 10.0);
  const auto res1 = branch_and_bound(m1);
  REQUIRE(res1.status == MilpStatus::Optimal);
  CHECK(res1.objective == doctest::Approx(0.0).epsilon(1e-8));
  // Exactly one selector is active.
  double zsum = 0.0;
  int active = 0;
  for (int z : enc.selector_cols) {
    zsum += res1.x(z);
    if (res1.x(z) > 0.5) ++active;
  }
  CHECK(zsum == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(active == 1);

  MilpModel m2;
  const int x2 = m2.lp.add_col("x", -10.0, 10.0, 1.0);
  m2.lp.add_row({{x2, -1.0}}, RowSense::LE, -1.5);  // x >= 1.5
  encode_region_union(m2, segs, {x2}, 10.0);
  const auto res2 = branch_and_bound(m2);
  REQUIRE(res2.status == MilpStatus::Optimal);
  CHECK(res2.objective == doctest::Approx(2.0).epsilon(1e-8));

  CHECK_THROWS(encode_region_union(m2, {}, {x2}, 10.0));

  // Projected membership audit: fixing the input makes the model feasible
  // exactly when the point lies in one of the segments.
  Rng rng(55);
  for (int k = 0; k < 200; ++k) {
    const double v = rng.uniform(-0.5, 3.5);
    MilpModel probe;
    const int xp = probe.lp.add_col("x", v, v, 0.0);
    encode_region_union(probe, segs, {xp}, 10.0);
    const auto res = branch_and_bound(probe);
    const bool member = (v >= 0.0 && v <= 1.0) || (v >= 2.0 && v <= 3.0);
    if (std::min({std::abs(v), std::abs(v - 1.0), std::abs(v - 2.0), std::abs(v - 3.0)}) < 1e-7)
      continue;
    CHECK((res.status == MilpStatus::Optimal) == member);
  }
}
