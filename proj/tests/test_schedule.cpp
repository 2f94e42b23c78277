#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "polyflow/schedule.hpp"
#include "polyflow/simplify.hpp"

using namespace polyflow;
using namespace polyflow::opt;

namespace {

grid::RadialNetwork two_bus() {
  grid::RadialNetwork net;
  net.n_bus = 2;
  net.root = 0;
  net.branches = {{0, 1, 0.01, 0.01, 0.0}};
  net.s_max_pu = 0.4;
  net.base_mva = 10.0;
  return net;
}

scen::Scenario toy_scenario(int T) {
  scen::Scenario sc;
  scen::BuildingParams b;
  b.bus = 1;
  b.p_hvac_max = 0.1;
  b.theta_init = 26.0;
  sc.buildings = {b};
  sc.series.dt_hours = 1.0;
  sc.series.theta_out.assign(static_cast<size_t>(T), 31.0);
  sc.series.q_heat_mw.assign(static_cast<size_t>(T), 0.02);
  sc.series.eta_buy.assign(static_cast<size_t>(T), 100.0);
  sc.series.eta_sell.assign(static_cast<size_t>(T), 40.0);
  scen::LoadSeries l;
  l.bus = 1;
  l.p_d_pu.assign(static_cast<size_t>(T), 0.05);
  l.q_d_pu.assign(static_cast<size_t>(T), 0.02);
  sc.series.loads = {l};
  scen::DgSeries d;
  d.bus = 1;
  d.g_avail_pu.assign(static_cast<size_t>(T), 0.5);
  sc.series.dgs = {d};
  return sc;
}

// Constant-output model: zero weights on a small hidden stack.
nn::MlpParams constant_model(int in_dim, int neurons, double value) {
  nn::MlpParams p;
  p.w = {Mat::Zero(neurons, in_dim)};
  p.b = {Vec::Zero(neurons)};
  p.w_out = Vec::Zero(neurons);
  p.b_out = value;
  p.scaler = nn::InputScaler::identity(in_dim);
  return p;
}

// Affine model h = w.x + b with no hidden layers.
nn::MlpParams linear_model(const Vec& w, double b) {
  nn::MlpParams p;
  p.w_out = w;
  p.b_out = b;
  p.scaler = nn::InputScaler::identity(static_cast<int>(w.size()));
  return p;
}

data::DomainBox wide_box(int d) {
  data::DomainBox box;
  box.lo = Vec::Constant(d, -2.0);
  box.hi = Vec::Constant(d, 2.0);
  return box;
}

}  // namespace

TEST_CASE("comfort screen flags impossible bands") {
  scen::Scenario sc = toy_scenario(6);
  CHECK(comfort_screen(sc).empty());

  scen::Scenario hot = sc;
  hot.series.theta_out.assign(6, 45.0);
  hot.buildings[0].p_hvac_max = 0.001;  // no meaningful cooling
  hot.buildings[0].theta_max = 25.0;
  hot.buildings[0].theta_init = 25.0;
  const auto issues = comfort_screen(hot);
  CHECK(!issues.empty());

  ScheduleInputs in;
  const auto net = two_bus();
  const auto vio = constant_model(3, 2, -0.1);
  const auto loss = constant_model(3, 1, 0.0);
  in.net = &net;
  in.scenario = &hot;
  in.violation_model = &vio;
  in.loss_model = &loss;
  in.domain_box = wide_box(3);
  CHECK_THROWS(build_schedule_problem(in, ScheduleMode::FullNetwork));
}

TEST_CASE("binary budget per mode") {
  const auto net = two_bus();
  const auto sc = toy_scenario(3);
  const auto vio = constant_model(3, 4, -0.1);
  const auto loss = constant_model(3, 2, 0.0);

  ScheduleInputs in;
  in.net = &net;
  in.scenario = &sc;
  in.violation_model = &vio;
  in.loss_model = &loss;
  in.domain_box = wide_box(3);

  const auto p2 = build_schedule_problem(in, ScheduleMode::FullNetwork);
  CHECK(static_cast<int>(p2.binaries.size()) == 3 * (4 + 2));

  // One region union: collect from a few samples, prune, reuse.
  std::vector<Vec> xs = {Vec::Zero(3)};
  const auto regions = pwl::collect_sample_regions(vio, xs, wide_box(3));
  auto kept = simplify::prune_regions(regions);
  std::vector<pwl::Polytope> polys;
  for (const auto& k : kept) polys.push_back(k.region.poly);
  in.regions = &polys;
  const auto p3 = build_schedule_problem(in, ScheduleMode::PrunedUnion);
  CHECK(static_cast<int>(p3.binaries.size()) == 3 * (1 + 2));
}

TEST_CASE("toy schedule matches a brute-force grid search") {
  const auto net = two_bus();
  const int T = 2;
  scen::Scenario sc = toy_scenario(T);
  // Tight comfort band makes cooling genuinely necessary.
  sc.buildings[0].theta_min = 24.0;
  sc.buildings[0].theta_max = 26.5;

  // Violation taught as "DG output above 0.3 in per-unit is unsafe".
  Vec w = Vec::Zero(3);
  w(2) = 1.0;
  const auto vio = linear_model(w, -0.3);
  const auto loss = constant_model(3, 1, 0.0);

  ScheduleInputs in;
  in.net = &net;
  in.scenario = &sc;
  in.violation_model = &vio;
  in.loss_model = &loss;
  in.domain_box = wide_box(3);
  in.steps = T;

  ScheduleColumns cols;
  const auto model = build_schedule_problem(in, ScheduleMode::FullNetwork, &cols);
  const auto res = branch_and_bound(model);
  REQUIRE(res.status == MilpStatus::Optimal);

  // Brute force over a fine lattice of the two decisions per step.
  const auto coeffs = scen::thermal_coefficients(sc.buildings[0], 1.0);
  double best = kInf;
  const int N = 60;
  auto step_cost = [&](int t, double p_hv, double lambda) {
    const double x_a = sc.series.loads[0].p_d_pu[static_cast<size_t>(t)] + p_hv / net.base_mva;
    const double x_g = sc.series.dgs[0].g_avail_pu[static_cast<size_t>(t)] * (1.0 - lambda);
    if (x_g > 0.3 + 1e-9) return kInf;  // violation model cuts it
    const double g_root = x_a - x_g;  // zero predicted loss
    return scen::energy_cost(g_root * net.base_mva, sc.series.eta_buy[static_cast<size_t>(t)],
                             sc.series.eta_sell[static_cast<size_t>(t)], 1.0);
  };
  for (int a0 = 0; a0 <= N; ++a0)
    for (int a1 = 0; a1 <= N; ++a1) {
      const double p0 = 0.1 * a0 / N, p1 = 0.1 * a1 / N;
      // Comfort feasibility of the cooling profile.
      double theta = sc.buildings[0].theta_init;
      bool ok = true;
      const double q0 = sc.buildings[0].cop * p0, q1 = sc.buildings[0].cop * p1;
      theta = coeffs.a_in * theta + coeffs.a_out * 31.0 + coeffs.a_h * (0.02 - q0);
      ok &= theta >= sc.buildings[0].theta_min - 1e-9 && theta <= sc.buildings[0].theta_max + 1e-9;
      theta = coeffs.a_in * theta + coeffs.a_out * 31.0 + coeffs.a_h * (0.02 - q1);
      ok &= theta >= sc.buildings[0].theta_min - 1e-9 && theta <= sc.buildings[0].theta_max + 1e-9;
      if (!ok) continue;
      for (int l0 = 0; l0 <= N; ++l0)
        for (int l1 = 0; l1 <= N; ++l1) {
          const double cost = step_cost(0, p0, 1.0 * l0 / N) + step_cost(1, p1, 1.0 * l1 / N);
          best = std::min(best, cost);
        }
    }
  REQUIRE(std::isfinite(best));
  // Lattice resolution limits the agreement.
  CHECK(res.objective <= best + 1e-6);
  CHECK(res.objective >= best - 0.2);

  // The pruned-union formulation can only narrow the feasible set.
  std::vector<Vec> xs;
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    Vec x(3);
    x << rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.05), rng.uniform(0.0, 0.3);
    xs.push_back(x);
  }
  const auto regions = pwl::collect_sample_regions(vio, xs, wide_box(3));
  auto kept = simplify::prune_regions(regions);
  std::vector<pwl::Polytope> polys;
  for (const auto& k : kept) polys.push_back(k.region.poly);
  in.regions = &polys;
  const auto p3_model = build_schedule_problem(in, ScheduleMode::PrunedUnion);
  const auto p3 = branch_and_bound(p3_model);
  REQUIRE(p3.status == MilpStatus::Optimal);
  CHECK(p3.objective >= res.objective - 1e-6);
  // The single learned region covers the whole lattice here, so the pruned
  // formulation also lands on the brute-force optimum.
  CHECK(p3.objective <= best + 1e-6);

  // Schedules extract into the documented ranges.
  const auto sched = extract_schedule(cols, res.x);
  CHECK(sched.p_hvac.rows() == T);
  for (int t = 0; t < T; ++t) {
    CHECK(sched.p_hvac(t, 0) >= 0.0);
    CHECK(sched.p_hvac(t, 0) <= 0.1 + 1e-9);
    CHECK(sched.curtail(t, 0) >= 0.0);
    CHECK(sched.curtail(t, 0) <= 1.0);
  }
}

TEST_CASE("dg scaling helper") {
  const auto sc = toy_scenario(3);
  const auto scaled = scale_dg_availability(sc, 2.5);
  CHECK(scaled.series.dgs[0].g_avail_pu[0] == doctest::Approx(1.25));
  CHECK(sc.series.dgs[0].g_avail_pu[0] == doctest::Approx(0.5));
}
