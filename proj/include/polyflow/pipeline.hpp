#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyflow/jsonio.hpp"
#include "polyflow/schedule.hpp"

namespace polyflow::pipeline {

struct MlpSpec {
  std::vector<int> layers;
  int epochs = 200;
  int batch = 256;
  double learning_rate = 3e-3;
};

struct Config {
  std::string network_path;
  std::string scenario_path;
  std::string out_dir = "artifacts";
  uint64_t seed = 1;

  int samples = 20000;
  double box_margin = 0.05;
  double validation_fraction = 0.1;

  MlpSpec vio{{6, 6, 6}};
  MlpSpec loss{{3, 3, 3}};

  std::vector<double> dg_scales{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  int solve_steps = -1;  // -1 = full horizon
  long node_limit = 2000000;
  double rel_gap = 0.0;  // exact by default
  double redundancy_tol = 1e-7;
  bool dump_models = false;
};

// Reads the config file; relative artifact paths resolve against its folder.
Config load_config(const std::string& path);

// One pipeline stage; `mode` applies to solve/evaluate/report ("p2", "p3" or
// "" for both where that makes sense). Throws with the missing artifact named
// when an upstream product is absent.
void run_stage(const Config& cfg, const std::string& stage, const std::string& mode = "");

struct AuditReport {
  double total_cost = 0.0;             // ground-truth energy cost, currency
  double max_voltage_violation = 0.0;  // p.u., 0 when all inside the band
  double max_apparent_flow = 0.0;      // p.u.
  double max_flow_violation_mw = 0.0;
  std::vector<double> h_true;   // per step, ground truth
  std::vector<double> h_model;  // per step, violation model's view (when given)
  std::vector<double> step_cost;
  std::vector<bool> converged;
  bool all_converged = true;
};

AuditReport evaluate_schedule(const grid::RadialNetwork& net, const scen::Scenario& sc,
                              const scen::Schedule& sched,
                              const nn::MlpParams* violation_model = nullptr);

// Aggregates whatever artifacts exist into report.csv / report.json.
// Returns false when there was nothing to report.
bool emit_report(const Config& cfg);

}  // namespace polyflow::pipeline
