#pragma once

#include <string>
#include <vector>

#include "polyflow/linalg.hpp"

namespace polyflow::grid {

struct Branch {
  int from = 0;  // parent-side bus
  int to = 0;    // child-side bus
  double r_pu = 0.0;
  double x_pu = 0.0;
  double s_max_pu = 0.0;  // 0 means "use the network-wide default"
};

// Radial network in per-unit. Branch orientation is parent -> child once
// rooted; the loader accepts either order and solve_power_flow orients them.
struct RadialNetwork {
  int n_bus = 0;
  int root = 0;
  std::vector<Branch> branches;
  double root_voltage_pu = 1.0;
  double v_min_pu = 0.9;
  double v_max_pu = 1.1;
  double s_max_pu = 1.0;
  double base_mva = 10.0;
  double base_kv = 12.66;

  double branch_limit(int b) const {
    const double s = branches[static_cast<size_t>(b)].s_max_pu;
    return s > 0.0 ? s : s_max_pu;
  }
};

// Per-bus injections in per-unit; generation positive, load negative.
// The root entry is ignored (the root balances the network).
struct Injection {
  Vec p;
  Vec q;
};

struct PowerFlowSolution {
  Vec v;       // per-bus voltage magnitude
  Vec p_flow;  // per-branch sending-end active flow, parent -> child
  Vec q_flow;
  Vec i_sq;    // per-branch squared current magnitude
  bool converged = false;
  double residual = 0.0;  // max-norm branch-flow residual at the returned point
  int iterations = 0;
};

// Structural diagnostics; an empty list means the network is usable.
std::vector<std::string> validate_network(const RadialNetwork& net);

// Backward-forward sweep on the branch-flow equations. Converges when the
// largest voltage update falls below `tol`; gives up after `max_iter` sweeps.
PowerFlowSolution solve_power_flow(const RadialNetwork& net, const Injection& inj,
                                   double tol = 1e-10, int max_iter = 200);

// Max-norm residual of all four branch-flow equation blocks at `sol`.
double distflow_residual(const RadialNetwork& net, const Injection& inj,
                         const PowerFlowSolution& sol);

// Largest normalized security violation: voltage band violations are scaled
// by the band width, apparent-flow violations by the branch limit.
// Non-positive iff every voltage and flow is within limits.
double violation_measure(const PowerFlowSolution& sol, const RadialNetwork& net);

// Total ohmic loss, sum of i^2 r over branches (p.u.).
double total_loss(const PowerFlowSolution& sol, const RadialNetwork& net);

// Net active power drawn from the upstream grid at the root (p.u.),
// positive when the network imports.
double root_import(const PowerFlowSolution& sol, const RadialNetwork& net);

}  // namespace polyflow::grid
