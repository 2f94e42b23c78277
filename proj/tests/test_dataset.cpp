#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polyflow/dataset.hpp"

using namespace polyflow;
using namespace polyflow::data;

namespace {

grid::RadialNetwork two_bus() {
  grid::RadialNetwork net;
  net.n_bus = 2;
  net.root = 0;
  net.branches = {{0, 1, 0.01, 0.01, 0.0}};
  net.s_max_pu = 0.4;
  return net;
}

scen::Scenario tiny_scenario(int T = 4) {
  scen::Scenario sc;
  scen::BuildingParams b;
  b.bus = 1;
  sc.buildings = {b};
  sc.series.dt_hours = 1.0;
  sc.series.theta_out.assign(static_cast<size_t>(T), 30.0);
  sc.series.q_heat_mw.assign(static_cast<size_t>(T), 0.02);
  sc.series.eta_buy.assign(static_cast<size_t>(T), 100.0);
  sc.series.eta_sell.assign(static_cast<size_t>(T), 40.0);
  scen::LoadSeries l;
  l.bus = 1;
  l.p_d_pu.assign(static_cast<size_t>(T), 0.1);
  l.q_d_pu.assign(static_cast<size_t>(T), 0.05);
  sc.series.loads = {l};
  scen::DgSeries d;
  d.bus = 1;
  d.g_avail_pu.assign(static_cast<size_t>(T), 0.2);
  sc.series.dgs = {d};
  return sc;
}

}  // namespace

TEST_CASE("sampler honors ranges and the seed") {
  const auto sc = tiny_scenario();
  const auto ranges = operating_ranges(sc, 10.0);
  REQUIRE(ranges.lo.size() == 3);
  CHECK(ranges.lo(2) == 0.0);
  CHECK(ranges.hi(2) == doctest::Approx(0.2));

  const auto xs = sample_inputs(ranges, 2000, 42);
  CHECK(xs.size() == 2000);
  for (const auto& x : xs)
    for (int j = 0; j < x.size(); ++j) {
      CHECK(x(j) >= ranges.lo(j));
      CHECK(x(j) <= ranges.hi(j));
    }

  const auto again = sample_inputs(ranges, 2000, 42);
  for (size_t i = 0; i < xs.size(); ++i) CHECK(xs[i] == again[i]);
  const auto other = sample_inputs(ranges, 2000, 43);
  CHECK(xs.front() != other.front());

  CHECK_THROWS(sample_inputs(ranges, 0, 1));
}

TEST_CASE("labeling grounds every sample in the physics") {
  const auto net = two_bus();
  const auto sc = tiny_scenario();

  // No demand and no generation: strictly feasible, zero loss.
  std::vector<Vec> zero = {Vec::Zero(3)};
  const auto labeled = label_dataset(net, sc, zero);
  REQUIRE(labeled.size() == 1);
  CHECK(labeled.front().h < 0.0);
  CHECK(labeled.front().p_loss == 0.0);

  // Relabeling reproduces the labels bit for bit.
  const auto ranges = operating_ranges(sc, 10.0);
  const auto xs = sample_inputs(ranges, 200, 7);
  LabelStats stats;
  const auto a = label_dataset(net, sc, xs, &stats);
  const auto b = label_dataset(net, sc, xs);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].h == b[i].h);
    CHECK(a[i].p_loss == b[i].p_loss);
  }
  CHECK(stats.dropped < 2);  // reference-style ranges stay convergent

  // A heavy overload shows up as a positive violation.
  Vec heavy(3);
  heavy << 2.0, 1.0, 0.0;
  const auto hot = label_dataset(net, sc, {heavy});
  REQUIRE(hot.size() == 1);
  CHECK(hot.front().h > 0.0);
}

TEST_CASE("domain box estimation") {
  std::vector<Vec> same(5, Vec::Constant(2, 3.0));
  const auto degen = estimate_domain_box(same, 0.0);
  CHECK(degen.lo(0) == 3.0);
  CHECK(degen.hi(0) == 3.0);

  std::vector<Vec> span;
  Vec a(1), b(1);
  a << 0.0;
  b << 1.0;
  span.push_back(a);
  span.push_back(b);
  const auto box = estimate_domain_box(span, 0.05);
  CHECK(box.lo(0) == doctest::Approx(-0.05));
  CHECK(box.hi(0) == doctest::Approx(1.05));

  Rng rng(5);
  std::vector<Vec> xs;
  for (int i = 0; i < 500; ++i) {
    Vec x(3);
    for (int j = 0; j < 3; ++j) x(j) = rng.uniform(-2.0, 5.0);
    xs.push_back(x);
  }
  const auto big = estimate_domain_box(xs, 0.1);
  for (const auto& x : xs) CHECK(big.contains(x));

  CHECK_THROWS(estimate_domain_box({}, 0.05));
}
