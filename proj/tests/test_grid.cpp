#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "polyflow/grid.hpp"
#include "polyflow/rng.hpp"

using namespace polyflow;
using namespace polyflow::grid;

namespace {

RadialNetwork two_bus(double r = 0.01, double x = 0.01) {
  RadialNetwork net;
  net.n_bus = 2;
  net.root = 0;
  net.branches = {{0, 1, r, x, 0.0}};
  net.root_voltage_pu = 1.0;
  net.v_min_pu = 0.9;
  net.v_max_pu = 1.1;
  net.s_max_pu = 0.4;
  return net;
}

// Independent scalar fixed-point solver for the single-branch case: iterates
// the branch-flow equations directly on one unknown current.
struct TwoBusOracle {
  double p_flow, q_flow, i_sq, v1;
};

TwoBusOracle solve_two_bus(double r, double x, double p_inj, double q_inj, double v0) {
  double i_sq = 0.0;
  for (int k = 0; k < 500; ++k) {
    const double p = -p_inj + r * i_sq;
    const double q = -q_inj + x * i_sq;
    const double next = (p * p + q * q) / (v0 * v0);
    if (std::abs(next - i_sq) < 1e-16) {
      i_sq = next;
      break;
    }
    i_sq = next;
  }
  TwoBusOracle o;
  o.p_flow = -p_inj + r * i_sq;
  o.q_flow = -q_inj + x * i_sq;
  o.i_sq = i_sq;
  o.v1 = std::sqrt(v0 * v0 - 2.0 * (r * o.p_flow + x * o.q_flow) + (r * r + x * x) * i_sq);
  return o;
}

RadialNetwork random_radial(Rng& rng, int n) {
  RadialNetwork net;
  net.n_bus = n;
  net.root = 0;
  for (int j = 1; j < n; ++j) {
    const int parent = static_cast<int>(rng.below(static_cast<uint64_t>(j)));
    net.branches.push_back({parent, j, rng.uniform(0.001, 0.05), rng.uniform(0.001, 0.05), 0.0});
  }
  net.s_max_pu = 2.0;
  return net;
}

}  // namespace

TEST_CASE("network validation diagnostics") {
  CHECK(validate_network(two_bus()).empty());

  RadialNetwork cyc;
  cyc.n_bus = 3;
  cyc.root = 0;
  cyc.branches = {{0, 1, 0.01, 0.01, 0.0}, {1, 2, 0.01, 0.01, 0.0}, {2, 0, 0.01, 0.01, 0.0}};
  bool saw_cycle = false;
  for (const auto& v : validate_network(cyc))
    if (v.find("cycle") != std::string::npos) saw_cycle = true;
  CHECK(saw_cycle);

  RadialNetwork neg = two_bus(-0.01, 0.01);
  bool saw_negative = false;
  for (const auto& v : validate_network(neg))
    if (v.find("negative resistance") != std::string::npos) saw_negative = true;
  CHECK(saw_negative);

  RadialNetwork disc;
  disc.n_bus = 4;
  disc.root = 0;
  disc.branches = {{0, 1, 0.01, 0.01, 0.0}, {2, 3, 0.01, 0.01, 0.0}, {3, 2, 0.01, 0.01, 0.0}};
  bool saw_disc = false;
  for (const auto& v : validate_network(disc))
    if (v.find("disconnected") != std::string::npos) saw_disc = true;
  CHECK(saw_disc);
}

TEST_CASE("no-load fixed point is exact") {
  Rng rng(7);
  const RadialNetwork net = random_radial(rng, 12);
  Injection inj{Vec::Zero(12), Vec::Zero(12)};
  const auto sol = solve_power_flow(net, inj);
  REQUIRE(sol.converged);
  for (int j = 0; j < 12; ++j) CHECK(sol.v(j) == net.root_voltage_pu);
  CHECK(sol.p_flow.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.i_sq.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-bus case matches the independent fixed-point oracle") {
  const RadialNetwork net = two_bus();
  Injection inj{Vec::Zero(2), Vec::Zero(2)};
  inj.p(1) = -0.1;
  inj.q(1) = -0.05;
  const auto sol = solve_power_flow(net, inj);
  REQUIRE(sol.converged);
  const auto oracle = solve_two_bus(0.01, 0.01, -0.1, -0.05, 1.0);
  CHECK(std::abs(sol.v(1) - oracle.v1) <= 1e-10);
  CHECK(std::abs(sol.i_sq(0) - oracle.i_sq) <= 1e-10);
  CHECK(std::abs(sol.p_flow(0) - oracle.p_flow) <= 1e-10);
  CHECK(sol.residual <= 1e-8);
}

TEST_CASE("generation at the leaf reverses the branch flow sign") {
  const RadialNetwork net = two_bus();
  Injection load{Vec::Zero(2), Vec::Zero(2)};
  load.p(1) = -0.1;
  Injection gen{Vec::Zero(2), Vec::Zero(2)};
  gen.p(1) = 0.1;
  const auto s_load = solve_power_flow(net, load);
  const auto s_gen = solve_power_flow(net, gen);
  REQUIRE(s_load.converged);
  REQUIRE(s_gen.converged);
  CHECK(s_load.p_flow(0) > 0.0);
  CHECK(s_gen.p_flow(0) < 0.0);
}

TEST_CASE("violation measure hand values") {
  RadialNetwork net = two_bus();
  net.s_max_pu = 0.4;

  PowerFlowSolution sol;
  sol.converged = true;
  sol.v = Vec::Constant(2, 1.0);
  sol.p_flow = Vec::Zero(1);
  sol.q_flow = Vec::Zero(1);
  sol.i_sq = Vec::Zero(1);
  CHECK(violation_measure(sol, net) == doctest::Approx(-0.5).epsilon(1e-12));

  sol.v(1) = 1.12;
  CHECK(violation_measure(sol, net) == doctest::Approx(0.02 / 0.2).epsilon(1e-9));

  sol.v(1) = 1.0;
  sol.p_flow(0) = 0.4;  // exactly at the limit
  CHECK(violation_measure(sol, net) == doctest::Approx(0.0).epsilon(1e-12));

  PowerFlowSolution bad;
  bad.converged = false;
  CHECK_THROWS(violation_measure(bad, net));
}

TEST_CASE("total loss values and root balance identity") {
  RadialNetwork net = two_bus();
  PowerFlowSolution sol;
  sol.converged = true;
  sol.v = Vec::Constant(2, 1.0);
  sol.p_flow = Vec::Zero(1);
  sol.q_flow = Vec::Zero(1);
  sol.i_sq = Vec::Zero(1);
  CHECK(total_loss(sol, net) == 0.0);

  sol.i_sq(0) = 0.04;
  CHECK(total_loss(sol, net) == doctest::Approx(4e-4).epsilon(1e-14));

  // At a solved operating point the loss closes the root power balance.
  Injection inj{Vec::Zero(2), Vec::Zero(2)};
  inj.p(1) = -0.1;
  inj.q(1) = -0.05;
  const auto solved = solve_power_flow(net, inj);
  REQUIRE(solved.converged);
  const double g_root = root_import(solved, net);
  CHECK(std::abs(total_loss(solved, net) - (g_root + inj.p.sum())) <= 1e-8);
}

TEST_CASE("residuals and security check agree on random cases") {
  Rng rng(42);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    RadialNetwork net = random_radial(rng, 2 + static_cast<int>(rng.below(10)));
    Injection inj{Vec::Zero(net.n_bus), Vec::Zero(net.n_bus)};
    for (int j = 1; j < net.n_bus; ++j) {
      inj.p(j) = rng.uniform(-0.08, 0.05);
      inj.q(j) = rng.uniform(-0.04, 0.02);
    }
    const auto sol = solve_power_flow(net, inj);
    if (!sol.converged) continue;
    ++checked;
    CHECK(distflow_residual(net, inj, sol) <= 1e-8);
    CHECK(total_loss(sol, net) >= 0.0);

    // h <= 0 exactly when every voltage and flow is inside its limits.
    const double h = violation_measure(sol, net);
    bool ok = true;
    for (int j = 0; j < net.n_bus; ++j)
      if (sol.v(j) < net.v_min_pu || sol.v(j) > net.v_max_pu) ok = false;
    for (int b = 0; b < static_cast<int>(net.branches.size()); ++b)
      if (std::hypot(sol.p_flow(b), sol.q_flow(b)) > net.branch_limit(b)) ok = false;
    CHECK((h <= 0.0) == ok);
  }
  CHECK(checked > 900);
}
