#pragma once

#include <string>
#include <vector>

#include "polyflow/grid.hpp"
#include "polyflow/milp.hpp"
#include "polyflow/scenario.hpp"

namespace polyflow::opt {

enum class ScheduleMode { FullNetwork, PrunedUnion };  // P2 / P3 formulations

struct ScheduleInputs {
  const grid::RadialNetwork* net = nullptr;
  const scen::Scenario* scenario = nullptr;
  const nn::MlpParams* violation_model = nullptr;
  const nn::MlpParams* loss_model = nullptr;
  // Retained region systems in the violation model's scaled frame
  // (PrunedUnion mode only).
  const std::vector<pwl::Polytope>* regions = nullptr;
  data::DomainBox domain_box;  // raw feature frame
  int steps = -1;              // -1 = full scenario horizon
};

// Column bookkeeping for reading schedules and diagnostics out of a solution.
struct ScheduleColumns {
  int steps = 0;
  std::vector<std::vector<int>> p_hvac;    // [t][building], MW
  std::vector<std::vector<int>> curtail;   // [t][dg]
  std::vector<std::vector<int>> theta;     // [t][building], end-of-step degC
  std::vector<std::vector<int>> features;  // [t][feature], p.u.
  std::vector<int> g_root;                 // p.u.
  std::vector<int> g_buy;
  std::vector<int> g_sell;
  std::vector<int> p_loss;
  std::vector<int> violation;                 // P2 only, empty otherwise
  std::vector<std::vector<int>> vio_mu;       // [t][neuron], P2 only
  std::vector<std::vector<int>> loss_mu;      // [t][neuron]
  std::vector<std::vector<int>> selectors;    // [t][region], P3 only
};

// Comfort windows unreachable under any admissible cooling profile; empty
// means the thermal problem is well posed.
std::vector<std::string> comfort_screen(const scen::Scenario& sc, int steps = -1);

MilpModel build_schedule_problem(const ScheduleInputs& in, ScheduleMode mode,
                                 ScheduleColumns* cols_out = nullptr);

// Branch ordering that resolves the loss estimate before everything else.
std::vector<int> branch_priorities(const MilpModel& model, const ScheduleColumns& cols);

scen::Schedule extract_schedule(const ScheduleColumns& cols, const Vec& x);

// A conservative feasible point (minimal cooling, full curtailment) turned
// into the exactly consistent binary assignment via forward passes; seeds the
// search with an incumbent. Empty when no such completion exists.
std::vector<std::pair<int, double>> warm_start_fixings(const ScheduleInputs& in,
                                                       ScheduleMode mode,
                                                       const ScheduleColumns& cols);

// DG availability scaled by a common factor; everything else shared.
scen::Scenario scale_dg_availability(const scen::Scenario& sc, double factor);

}  // namespace polyflow::opt
