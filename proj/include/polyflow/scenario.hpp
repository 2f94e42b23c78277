#pragma once

#include <string>
#include <utility>
#include <vector>

#include "polyflow/linalg.hpp"

namespace polyflow::scen {

struct BuildingParams {
  int bus = 0;
  double heat_capacity = 1.0;   // MWh per degC
  double heat_transfer = 0.03;  // MW per degC
  double cop = 6.0;
  double power_factor = 0.98;  // in (0, 1]
  double theta_min = 24.0;     // degC comfort band
  double theta_max = 28.0;
  double p_hvac_max = 0.1;  // MW electrical cap
  double theta_init = 26.0;
};

struct LoadSeries {
  int bus = 0;
  std::vector<double> p_d_pu;
  std::vector<double> q_d_pu;
};

struct DgSeries {
  int bus = 0;
  std::vector<double> g_avail_pu;  // available generation before curtailment
};

struct ExogenousSeries {
  std::vector<double> theta_out;   // degC
  std::vector<double> q_heat_mw;   // indoor gains, applied to every building
  std::vector<double> eta_buy;     // currency per MWh, eta_buy >= eta_sell >= 0
  std::vector<double> eta_sell;
  std::vector<LoadSeries> loads;   // monitored load buses, fixed order
  std::vector<DgSeries> dgs;
  double dt_hours = 1.0;

  int horizon() const { return static_cast<int>(theta_out.size()); }
};

struct Scenario {
  std::vector<BuildingParams> buildings;  // hosted on monitored load buses
  ExogenousSeries series;

  int n_load() const { return static_cast<int>(series.loads.size()); }
  int n_dg() const { return static_cast<int>(series.dgs.size()); }
  int n_building() const { return static_cast<int>(buildings.size()); }
  // Feature layout: [active demand per load bus | reactive demand per load
  // bus | used generation per DG].
  int feature_dim() const { return 2 * n_load() + n_dg(); }
  // Index of the building hosted on load slot i, or -1.
  int building_at_load(int i) const;
  std::vector<std::string> feature_names() const;
  std::vector<std::string> validate() const;
};

struct Schedule {
  Mat p_hvac;   // horizon x buildings, MW
  Mat curtail;  // horizon x dgs, in [0, 1]
};

struct ThermalCoeffs {
  double a_in = 1.0;
  double a_out = 0.0;
  double a_h = 0.0;
};

ThermalCoeffs thermal_coefficients(const BuildingParams& b, double dt_hours);

// Indoor temperature trace over q_cool.size() steps; entry t is the
// temperature after step t's inputs have acted. theta_init is the state
// before the first step.
std::vector<double> simulate_indoor_temperature(const BuildingParams& b, double dt_hours,
                                                const std::vector<double>& theta_out,
                                                const std::vector<double>& q_heat_mw,
                                                const std::vector<double>& q_cool_mw,
                                                double theta_init);

// Electrical active/reactive draw of an HVAC unit delivering q_cool (MW).
std::pair<double, double> hvac_electrical_power(const BuildingParams& b, double q_cool_mw);

// Usable generation after curtailment.
double drg_output(double g_avail, double lambda);

// Feature vector at step t: monitored active demands, reactive demands and
// used DG output, all in per-unit on base_mva.
Vec feature_vector(const Scenario& sc, const Schedule& sched, int t, double base_mva);

// Decode a feature vector into per-bus injections (generation positive).
void injection_into(const Scenario& sc, const Vec& x, Vec& p, Vec& q);

// Energy trade cost for one step under the cost-minimal buy/sell split.
double energy_cost(double g_root, double eta_buy, double eta_sell, double dt_hours);

}  // namespace polyflow::scen
