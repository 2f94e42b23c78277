#include "polyflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace polyflow::grid {
namespace {

// Parent-oriented view of the branch list plus a root-first bus order.
struct Tree {
  std::vector<int> order;          // buses, root first, parents before children
  std::vector<int> parent_branch;  // per bus, -1 at root
  std::vector<int> branch_from;    // oriented parent bus per branch
  std::vector<int> branch_to;      // oriented child bus per branch
};

bool build_tree(const RadialNetwork& net, Tree& tree) {
  const int n = net.n_bus;
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(n));
  for (int b = 0; b < static_cast<int>(net.branches.size()); ++b) {
    const auto& br = net.branches[static_cast<size_t>(b)];
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) return false;
    adj[static_cast<size_t>(br.from)].push_back({br.to, b});
    adj[static_cast<size_t>(br.to)].push_back({br.from, b});
  }
  tree.order.clear();
  tree.parent_branch.assign(static_cast<size_t>(n), -1);
  tree.branch_from.assign(net.branches.size(), -1);
  tree.branch_to.assign(net.branches.size(), -1);
  std::vector<bool> seen(static_cast<size_t>(n), false);
  std::queue<int> q;
  q.push(net.root);
  seen[static_cast<size_t>(net.root)] = true;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    tree.order.push_back(u);
    for (const auto& [v, b] : adj[static_cast<size_t>(u)]) {
      if (seen[static_cast<size_t>(v)]) continue;
      seen[static_cast<size_t>(v)] = true;
      tree.parent_branch[static_cast<size_t>(v)] = b;
      tree.branch_from[static_cast<size_t>(b)] = u;
      tree.branch_to[static_cast<size_t>(b)] = v;
      q.push(v);
    }
  }
  if (static_cast<int>(tree.order.size()) != n) return false;
  for (int b : tree.branch_from)
    if (b < 0) return false;  // some branch closed a cycle
  return true;
}

void require_converged(const PowerFlowSolution& sol, const char* what) {
  if (!sol.converged)
    throw std::invalid_argument(std::string(what) + ": power flow solution did not converge");
}

}  // namespace

std::vector<std::string> validate_network(const RadialNetwork& net) {
  std::vector<std::string> issues;
  if (net.n_bus < 1) issues.push_back("network has no buses");
  if (net.root < 0 || net.root >= net.n_bus) issues.push_back("root bus index out of range");
  if (static_cast<int>(net.branches.size()) != net.n_bus - 1)
    issues.push_back("branch count must equal bus count minus one");
  for (size_t b = 0; b < net.branches.size(); ++b) {
    const auto& br = net.branches[b];
    if (br.from < 0 || br.from >= net.n_bus || br.to < 0 || br.to >= net.n_bus)
      issues.push_back("branch " + std::to_string(b) + ": endpoint out of range");
    if (br.r_pu < 0.0) issues.push_back("branch " + std::to_string(b) + ": negative resistance");
    if (!std::isfinite(br.r_pu) || !std::isfinite(br.x_pu))
      issues.push_back("branch " + std::to_string(b) + ": non-finite impedance");
  }
  if (!(net.v_min_pu < net.v_max_pu)) issues.push_back("inverted voltage bounds");
  if (!(net.s_max_pu > 0.0)) issues.push_back("apparent-flow limit must be positive");
  if (!(net.root_voltage_pu > 0.0)) issues.push_back("root voltage must be positive");

  // Connectivity / cycle check, only meaningful if indices were sane.
  bool indices_ok = true;
  for (const auto& br : net.branches)
    if (br.from < 0 || br.from >= net.n_bus || br.to < 0 || br.to >= net.n_bus) indices_ok = false;
  if (indices_ok && net.n_bus >= 1 && net.root >= 0 && net.root < net.n_bus) {
    // Orient branches away from the root; a branch left unoriented while both
    // endpoints were reached closes a cycle, an unreached bus is disconnected.
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(net.n_bus));
    for (int b = 0; b < static_cast<int>(net.branches.size()); ++b) {
      const auto& br = net.branches[static_cast<size_t>(b)];
      adj[static_cast<size_t>(br.from)].push_back({br.to, b});
      adj[static_cast<size_t>(br.to)].push_back({br.from, b});
    }
    std::vector<bool> seen(static_cast<size_t>(net.n_bus), false);
    std::vector<bool> tree_edge(net.branches.size(), false);
    std::queue<int> q;
    q.push(net.root);
    seen[static_cast<size_t>(net.root)] = true;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const auto& [v, b] : adj[static_cast<size_t>(u)]) {
        if (seen[static_cast<size_t>(v)]) continue;
        seen[static_cast<size_t>(v)] = true;
        tree_edge[static_cast<size_t>(b)] = true;
        q.push(v);
      }
    }
    bool disconnected = false, cycle = false;
    for (int j = 0; j < net.n_bus; ++j)
      if (!seen[static_cast<size_t>(j)]) disconnected = true;
    for (size_t b = 0; b < net.branches.size(); ++b)
      if (!tree_edge[b] && seen[static_cast<size_t>(net.branches[b].from)] &&
          seen[static_cast<size_t>(net.branches[b].to)])
        cycle = true;
    if (disconnected) issues.push_back("disconnected bus: not every bus reaches the root");
    if (cycle) issues.push_back("cycle detected in branch graph");
  }
  return issues;
}

PowerFlowSolution solve_power_flow(const RadialNetwork& net, const Injection& inj,
                                   double tol, int max_iter) {
  if (!validate_network(net).empty())
    throw std::invalid_argument("solve_power_flow: invalid network");
  const int n = net.n_bus;
  const int nb = static_cast<int>(net.branches.size());
  if (inj.p.size() != n || inj.q.size() != n)
    throw std::invalid_argument("solve_power_flow: injection length must equal bus count");
  if (!inj.p.allFinite() || !inj.q.allFinite())
    throw std::invalid_argument("solve_power_flow: non-finite injection");

  Tree tree;
  build_tree(net, tree);

  PowerFlowSolution sol;
  sol.v = Vec::Constant(n, net.root_voltage_pu);
  sol.p_flow = Vec::Zero(nb);
  sol.q_flow = Vec::Zero(nb);
  sol.i_sq = Vec::Zero(nb);

  // Children per bus in tree order for the backward sweep.
  std::vector<std::vector<int>> child_branches(static_cast<size_t>(n));
  for (int b = 0; b < nb; ++b)
    child_branches[static_cast<size_t>(tree.branch_from[static_cast<size_t>(b)])].push_back(b);

  Vec v_sq = sol.v.array().square();
  for (int it = 1; it <= max_iter; ++it) {
    // Backward: aggregate branch flows from the leaves toward the root,
    // using the current squared-current estimates.
    for (int idx = n - 1; idx >= 0; --idx) {
      const int j = tree.order[static_cast<size_t>(idx)];
      const int pb = tree.parent_branch[static_cast<size_t>(j)];
      if (pb < 0) continue;
      double p_down = 0.0, q_down = 0.0;
      for (int cb : child_branches[static_cast<size_t>(j)]) {
        p_down += sol.p_flow(cb);
        q_down += sol.q_flow(cb);
      }
      const auto& br = net.branches[static_cast<size_t>(pb)];
      sol.p_flow(pb) = p_down - inj.p(j) + br.r_pu * sol.i_sq(pb);
      sol.q_flow(pb) = q_down - inj.q(j) + br.x_pu * sol.i_sq(pb);
    }
    // Forward: update voltages from the root, then refresh currents.
    double dv = 0.0;
    for (int idx = 0; idx < n; ++idx) {
      const int j = tree.order[static_cast<size_t>(idx)];
      const int pb = tree.parent_branch[static_cast<size_t>(j)];
      if (pb < 0) {
        v_sq(j) = net.root_voltage_pu * net.root_voltage_pu;
        continue;
      }
      const int i = tree.branch_from[static_cast<size_t>(pb)];
      const auto& br = net.branches[static_cast<size_t>(pb)];
      const double v2 = v_sq(i) - 2.0 * (br.r_pu * sol.p_flow(pb) + br.x_pu * sol.q_flow(pb)) +
                        (br.r_pu * br.r_pu + br.x_pu * br.x_pu) * sol.i_sq(pb);
      if (!(v2 > 0.0)) {
        sol.converged = false;
        sol.iterations = it;
        sol.residual = distflow_residual(net, inj, sol);
        return sol;  // voltage collapse
      }
      const double v_new = std::sqrt(v2);
      dv = std::max(dv, std::abs(v_new - sol.v(j)));
      sol.v(j) = v_new;
      v_sq(j) = v2;
    }
    for (int b = 0; b < nb; ++b) {
      const int i = tree.branch_from[static_cast<size_t>(b)];
      sol.i_sq(b) =
          (sol.p_flow(b) * sol.p_flow(b) + sol.q_flow(b) * sol.q_flow(b)) / v_sq(i);
    }
    sol.iterations = it;
    if (dv <= tol && it > 1) {
      sol.residual = distflow_residual(net, inj, sol);
      sol.converged = sol.residual <= 1e-8;
      return sol;
    }
  }
  sol.residual = distflow_residual(net, inj, sol);
  sol.converged = false;
  return sol;
}

double distflow_residual(const RadialNetwork& net, const Injection& inj,
                         const PowerFlowSolution& sol) {
  Tree tree;
  if (!build_tree(net, tree)) return kInf;
  const int n = net.n_bus;
  const int nb = static_cast<int>(net.branches.size());
  std::vector<std::vector<int>> child_branches(static_cast<size_t>(n));
  for (int b = 0; b < nb; ++b)
    child_branches[static_cast<size_t>(tree.branch_from[static_cast<size_t>(b)])].push_back(b);

  double res = 0.0;
  for (int b = 0; b < nb; ++b) {
    const int i = tree.branch_from[static_cast<size_t>(b)];
    const int j = tree.branch_to[static_cast<size_t>(b)];
    const auto& br = net.branches[static_cast<size_t>(b)];
    double p_down = 0.0, q_down = 0.0;
    for (int cb : child_branches[static_cast<size_t>(j)]) {
      p_down += sol.p_flow(cb);
      q_down += sol.q_flow(cb);
    }
    const double vi2 = sol.v(i) * sol.v(i);
    const double vj2 = sol.v(j) * sol.v(j);
    res = std::max(res, std::abs(p_down - inj.p(j) - sol.p_flow(b) + br.r_pu * sol.i_sq(b)));
    res = std::max(res, std::abs(q_down - inj.q(j) - sol.q_flow(b) + br.x_pu * sol.i_sq(b)));
    res = std::max(res, std::abs(vj2 - vi2 + 2.0 * (br.r_pu * sol.p_flow(b) + br.x_pu * sol.q_flow(b)) -
                                 (br.r_pu * br.r_pu + br.x_pu * br.x_pu) * sol.i_sq(b)));
    res = std::max(res, std::abs(sol.i_sq(b) -
                                 (sol.p_flow(b) * sol.p_flow(b) + sol.q_flow(b) * sol.q_flow(b)) / vi2));
  }
  return res;
}

double violation_measure(const PowerFlowSolution& sol, const RadialNetwork& net) {
  require_converged(sol, "violation_measure");
  const double band = net.v_max_pu - net.v_min_pu;
  double h = -kInf;
  for (int j = 0; j < net.n_bus; ++j) {
    h = std::max(h, (net.v_min_pu - sol.v(j)) / band);
    h = std::max(h, (sol.v(j) - net.v_max_pu) / band);
  }
  for (int b = 0; b < static_cast<int>(net.branches.size()); ++b) {
    const double s = std::hypot(sol.p_flow(b), sol.q_flow(b));
    const double s_max = net.branch_limit(b);
    h = std::max(h, (s - s_max) / s_max);
  }
  return h;
}

double total_loss(const PowerFlowSolution& sol, const RadialNetwork& net) {
  require_converged(sol, "total_loss");
  double loss = 0.0;
  for (int b = 0; b < static_cast<int>(net.branches.size()); ++b)
    loss += sol.i_sq(b) * net.branches[static_cast<size_t>(b)].r_pu;
  return loss;
}

double root_import(const PowerFlowSolution& sol, const RadialNetwork& net) {
  require_converged(sol, "root_import");
  Tree tree;
  build_tree(net, tree);
  double g = 0.0;
  for (int b = 0; b < static_cast<int>(net.branches.size()); ++b)
    if (tree.branch_from[static_cast<size_t>(b)] == net.root) g += sol.p_flow(b);
  return g;
}

}  // namespace polyflow::grid
