#include "polyflow/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace polyflow::scen {

int Scenario::building_at_load(int i) const {
  const int bus = series.loads[static_cast<size_t>(i)].bus;
  for (int k = 0; k < n_building(); ++k)
    if (buildings[static_cast<size_t>(k)].bus == bus) return k;
  return -1;
}

std::vector<std::string> Scenario::feature_names() const {
  std::vector<std::string> names;
  for (const auto& l : series.loads) names.push_back("p_demand_bus" + std::to_string(l.bus));
  for (const auto& l : series.loads) names.push_back("q_demand_bus" + std::to_string(l.bus));
  for (const auto& d : series.dgs) names.push_back("p_dg_bus" + std::to_string(d.bus));
  return names;
}

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> issues;
  const size_t T = series.theta_out.size();
  auto check_len = [&](size_t n, const char* what) {
    if (n != T) issues.push_back(std::string(what) + ": length differs from horizon");
  };
  check_len(series.q_heat_mw.size(), "q_heat");
  check_len(series.eta_buy.size(), "eta_buy");
  check_len(series.eta_sell.size(), "eta_sell");
  for (const auto& l : series.loads) {
    check_len(l.p_d_pu.size(), "load p_d");
    check_len(l.q_d_pu.size(), "load q_d");
  }
  for (const auto& d : series.dgs) check_len(d.g_avail_pu.size(), "dg availability");
  for (size_t t = 0; t < std::min(series.eta_buy.size(), series.eta_sell.size()); ++t) {
    if (series.eta_sell[t] < 0.0 || series.eta_buy[t] < series.eta_sell[t]) {
      issues.push_back("tariffs must satisfy eta_buy >= eta_sell >= 0");
      break;
    }
  }
  for (const auto& d : series.dgs)
    for (double g : d.g_avail_pu)
      if (g < 0.0) {
        issues.push_back("negative DG availability");
        break;
      }
  for (const auto& b : buildings) {
    if (!(b.heat_capacity > 0.0)) issues.push_back("building heat capacity must be positive");
    if (!(b.heat_transfer > 0.0)) issues.push_back("building heat transfer must be positive");
    if (!(b.cop > 0.0)) issues.push_back("COP must be positive");
    if (!(b.power_factor > 0.0 && b.power_factor <= 1.0))
      issues.push_back("power factor must be in (0, 1]");
    if (!(b.theta_min < b.theta_max)) issues.push_back("inverted comfort band");
    if (b.p_hvac_max < 0.0) issues.push_back("negative HVAC cap");
    bool hosted = false;
    for (const auto& l : series.loads)
      if (l.bus == b.bus) hosted = true;
    if (!hosted) issues.push_back("building bus " + std::to_string(b.bus) + " is not a load bus");
  }
  if (!(series.dt_hours > 0.0)) issues.push_back("dt must be positive");
  return issues;
}

ThermalCoeffs thermal_coefficients(const BuildingParams& b, double dt_hours) {
  if (!(b.heat_transfer > 0.0) || !(b.heat_capacity > 0.0))
    throw std::invalid_argument("thermal_coefficients: g and C must be positive");
  if (dt_hours < 0.0) throw std::invalid_argument("thermal_coefficients: negative dt");
  ThermalCoeffs c;
  c.a_in = std::exp(-b.heat_transfer / b.heat_capacity * dt_hours);
  c.a_out = 1.0 - c.a_in;
  c.a_h = c.a_out / b.heat_transfer;
  return c;
}

std::vector<double> simulate_indoor_temperature(const BuildingParams& b, double dt_hours,
                                                const std::vector<double>& theta_out,
                                                const std::vector<double>& q_heat_mw,
                                                const std::vector<double>& q_cool_mw,
                                                double theta_init) {
  const size_t T = q_cool_mw.size();
  if (theta_out.size() < T || q_heat_mw.size() < T)
    throw std::invalid_argument("simulate_indoor_temperature: series shorter than schedule");
  const ThermalCoeffs c = thermal_coefficients(b, dt_hours);
  std::vector<double> theta(T);
  double prev = theta_init;
  for (size_t t = 0; t < T; ++t) {
    prev = c.a_in * prev + c.a_out * theta_out[t] + c.a_h * (q_heat_mw[t] - q_cool_mw[t]);
    theta[t] = prev;
  }
  return theta;
}

std::pair<double, double> hvac_electrical_power(const BuildingParams& b, double q_cool_mw) {
  if (!(b.power_factor > 0.0 && b.power_factor <= 1.0))
    throw std::invalid_argument("hvac_electrical_power: power factor must be in (0, 1]");
  if (q_cool_mw < 0.0) throw std::invalid_argument("hvac_electrical_power: negative cooling");
  const double p = q_cool_mw / b.cop;
  const double q = std::sqrt(std::max(0.0, 1.0 - b.power_factor * b.power_factor)) /
                   b.power_factor * p;
  return {p, q};
}

double drg_output(double g_avail, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("drg_output: curtailment rate outside [0, 1]");
  if (g_avail < 0.0) throw std::invalid_argument("drg_output: negative availability");
  return g_avail * (1.0 - lambda);
}

// kappa = sqrt(1 - phi^2) / phi, the reactive-per-active ratio of a unit.
static double reactive_ratio(const BuildingParams& b) {
  return std::sqrt(std::max(0.0, 1.0 - b.power_factor * b.power_factor)) / b.power_factor;
}

Vec feature_vector(const Scenario& sc, const Schedule& sched, int t, double base_mva) {
  if (t < 0 || t >= sc.series.horizon())
    throw std::out_of_range("feature_vector: step index out of range");
  const int nl = sc.n_load();
  const int nd = sc.n_dg();
  Vec x = Vec::Zero(sc.feature_dim());
  for (int i = 0; i < nl; ++i) {
    const auto& load = sc.series.loads[static_cast<size_t>(i)];
    double p_hv = 0.0, q_hv = 0.0;
    const int k = sc.building_at_load(i);
    if (k >= 0 && sched.p_hvac.size() > 0) {
      p_hv = sched.p_hvac(t, k);
      q_hv = reactive_ratio(sc.buildings[static_cast<size_t>(k)]) * p_hv;
    }
    x(i) = p_hv / base_mva + load.p_d_pu[static_cast<size_t>(t)];
    x(nl + i) = q_hv / base_mva + load.q_d_pu[static_cast<size_t>(t)];
  }
  for (int g = 0; g < nd; ++g) {
    const auto& dg = sc.series.dgs[static_cast<size_t>(g)];
    const double lambda = sched.curtail.size() > 0 ? sched.curtail(t, g) : 0.0;
    x(2 * nl + g) = drg_output(dg.g_avail_pu[static_cast<size_t>(t)], lambda);
  }
  return x;
}

void injection_into(const Scenario& sc, const Vec& x, Vec& p, Vec& q) {
  if (x.size() != sc.feature_dim())
    throw std::invalid_argument("injection_into: feature dimension mismatch");
  p.setZero();
  q.setZero();
  const int nl = sc.n_load();
  for (int i = 0; i < nl; ++i) {
    const int bus = sc.series.loads[static_cast<size_t>(i)].bus;
    p(bus) -= x(i);
    q(bus) -= x(nl + i);
  }
  for (int g = 0; g < sc.n_dg(); ++g) p(sc.series.dgs[static_cast<size_t>(g)].bus) += x(2 * nl + g);
}

double energy_cost(double g_root, double eta_buy, double eta_sell, double dt_hours) {
  const double bought = std::max(g_root, 0.0);
  const double sold = std::max(-g_root, 0.0);
  return (eta_buy * bought - eta_sell * sold) * dt_hours;
}

}  // namespace polyflow::scen
