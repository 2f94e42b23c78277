#include "polyflow/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace polyflow::data {

bool DomainBox::contains(const Vec& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (int j = 0; j < x.size(); ++j)
    if (x(j) < lo(j) - tol || x(j) > hi(j) + tol) return false;
  return true;
}

SampleRanges operating_ranges(const scen::Scenario& sc, double base_mva, double dg_scale_max) {
  const int nl = sc.n_load();
  const int nd = sc.n_dg();
  SampleRanges r;
  r.lo = Vec::Zero(sc.feature_dim());
  r.hi = Vec::Zero(sc.feature_dim());
  for (int i = 0; i < nl; ++i) {
    const auto& load = sc.series.loads[static_cast<size_t>(i)];
    const double p_min = *std::min_element(load.p_d_pu.begin(), load.p_d_pu.end());
    const double p_max = *std::max_element(load.p_d_pu.begin(), load.p_d_pu.end());
    const double q_min = *std::min_element(load.q_d_pu.begin(), load.q_d_pu.end());
    const double q_max = *std::max_element(load.q_d_pu.begin(), load.q_d_pu.end());
    double hv_p = 0.0, hv_q = 0.0;
    const int k = sc.building_at_load(i);
    if (k >= 0) {
      const auto& b = sc.buildings[static_cast<size_t>(k)];
      auto [p_el, q_el] = scen::hvac_electrical_power(b, b.cop * b.p_hvac_max);
      hv_p = p_el / base_mva;
      hv_q = q_el / base_mva;
    }
    r.lo(i) = p_min;
    r.hi(i) = p_max + hv_p;
    r.lo(nl + i) = q_min;
    r.hi(nl + i) = q_max + hv_q;
  }
  for (int g = 0; g < nd; ++g) {
    const auto& dg = sc.series.dgs[static_cast<size_t>(g)];
    const double g_max = *std::max_element(dg.g_avail_pu.begin(), dg.g_avail_pu.end());
    r.lo(2 * nl + g) = 0.0;
    r.hi(2 * nl + g) = g_max * dg_scale_max;
  }
  for (int j = 0; j < r.lo.size(); ++j)
    if (!(r.lo(j) <= r.hi(j))) throw std::invalid_argument("operating_ranges: empty range");
  return r;
}

std::vector<Vec> sample_inputs(const SampleRanges& ranges, int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_inputs: need at least one sample");
  Rng rng(seed);
  const int d = static_cast<int>(ranges.lo.size());
  std::vector<Vec> xs;
  xs.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.uniform(ranges.lo(j), ranges.hi(j));
    xs.push_back(std::move(x));
  }
  return xs;
}

std::vector<Sample> label_dataset(const grid::RadialNetwork& net, const scen::Scenario& sc,
                                  const std::vector<Vec>& xs, LabelStats* stats) {
  std::vector<Sample> out;
  out.reserve(xs.size());
  int dropped = 0;
  Vec p(net.n_bus), q(net.n_bus);
  for (const Vec& x : xs) {
    scen::injection_into(sc, x, p, q);
    const auto sol = grid::solve_power_flow(net, {p, q});
    if (!sol.converged) {
      ++dropped;
      continue;
    }
    Sample s;
    s.x = x;
    s.h = grid::violation_measure(sol, net);
    s.p_loss = grid::total_loss(sol, net);
    out.push_back(std::move(s));
  }
  if (stats) stats->dropped = dropped;
  return out;
}

DomainBox estimate_domain_box(const std::vector<Vec>& xs, double margin) {
  if (xs.empty()) throw std::invalid_argument("estimate_domain_box: empty sample set");
  DomainBox box;
  box.lo = xs.front();
  box.hi = xs.front();
  for (const Vec& x : xs) {
    box.lo = box.lo.cwiseMin(x);
    box.hi = box.hi.cwiseMax(x);
  }
  const Vec range = box.hi - box.lo;
  box.lo -= margin * range;
  box.hi += margin * range;
  return box;
}

}  // namespace polyflow::data
