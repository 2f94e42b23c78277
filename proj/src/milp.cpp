#include "polyflow/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <queue>
#include <stdexcept>

namespace polyflow::opt {

namespace {

struct Node {
  int parent = -1;
  int col = -1;  // bound change relative to the parent; -1 at the root
  double fix = 0.0;
  double bound = -kInf;  // parent relaxation objective
  long id = 0;
};

struct HeapEntry {
  double bound;
  long id;
  size_t index;
  bool operator>(const HeapEntry& o) const {
    if (bound != o.bound) return bound > o.bound;
    return id > o.id;
  }
};

int most_fractional(const Vec& x, const std::vector<int>& binaries, double int_tol,
                    const std::vector<int>* priority = nullptr) {
  int pick = -1;
  double best = int_tol;
  int best_prio = std::numeric_limits<int>::min();
  for (int col : binaries) {
    const double frac = x(col) - std::floor(x(col));
    const double dist = std::min(frac, 1.0 - frac);
    if (dist <= int_tol) continue;
    const int prio =
        priority && col < static_cast<int>(priority->size()) ? (*priority)[static_cast<size_t>(col)] : 0;
    if (prio > best_prio || (prio == best_prio && dist > best + 1e-15)) {
      best_prio = prio;
      best = dist;
      pick = col;
    }
  }
  return pick;
}

}  // namespace

SolveResult branch_and_bound(const MilpModel& model, const BnbOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  for (int col : model.binaries)
    if (model.lp.lo(col) < -1e-9 || model.lp.up(col) > 1.0 + 1e-9)
      throw std::invalid_argument("branch_and_bound: binary columns must lie within [0, 1]");

  SolveResult res;
  SimplexSolver solver(model.lp);

  const int nb = static_cast<int>(model.binaries.size());
  std::vector<Node> pool;
  pool.push_back({});  // root
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;
  heap.push({-kInf, 0, 0});

  bool have_incumbent = false;
  double inc_obj = kInf;
  Vec inc_x;
  const auto gap_slack = [&]() {
    return std::max(opts.abs_gap, opts.rel_gap * std::abs(inc_obj));
  };
  long next_id = 1;
  std::vector<std::pair<double, double>> scratch(static_cast<size_t>(nb));

  auto apply_node_bounds = [&](size_t node_index) {
    for (int k = 0; k < nb; ++k) {
      const int col = model.binaries[static_cast<size_t>(k)];
      scratch[static_cast<size_t>(k)] = {model.lp.lo(col), model.lp.up(col)};
    }
    for (int cur = static_cast<int>(node_index); cur >= 0; cur = pool[static_cast<size_t>(cur)].parent) {
      const Node& nd = pool[static_cast<size_t>(cur)];
      if (nd.col < 0) continue;
      // Nearest-to-node change wins; mark applied via NaN sentinel.
      for (int k = 0; k < nb; ++k)
        if (model.binaries[static_cast<size_t>(k)] == nd.col) {
          if (!std::isnan(scratch[static_cast<size_t>(k)].first)) {
            scratch[static_cast<size_t>(k)] = {std::nan(""), nd.fix};
          }
          break;
        }
    }
    for (int k = 0; k < nb; ++k) {
      const int col = model.binaries[static_cast<size_t>(k)];
      const auto& [l, u] = scratch[static_cast<size_t>(k)];
      if (std::isnan(l))
        solver.set_bounds(col, u, u);
      else
        solver.set_bounds(col, l, u);
    }
  };

  auto finish = [&](MilpStatus status) {
    res.status = status;
    if (have_incumbent) {
      res.objective = inc_obj;
      res.x = inc_x;
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
  };

  // A caller-supplied consistent binary assignment: fix it, solve the rest.
  auto try_warm = [&]() {
    apply_node_bounds(0);
    for (const auto& [col, v] : opts.warm_fixings) solver.set_bounds(col, v, v);
    const LpResult lp = solver.solve();
    if (lp.status != LpStatus::Optimal) return;
    if (most_fractional(lp.x, model.binaries, opts.int_tol, &opts.branch_priority) >= 0) return;
    if (!have_incumbent || lp.objective < inc_obj) {
      have_incumbent = true;
      inc_obj = lp.objective;
      inc_x = lp.x;
    }
  };
  if (!opts.warm_fixings.empty()) try_warm();

  // Rounding dive from the root to seed the incumbent: each round pins every
  // near-integral binary and rounds the most fractional one, so only a few
  // re-solves are needed regardless of the binary count.
  auto try_dive = [&]() {
    apply_node_bounds(0);
    LpResult lp = solver.solve();
    if (lp.status != LpStatus::Optimal) return;
    for (int round = 0; round < 40; ++round) {
      const int frac_col = most_fractional(lp.x, model.binaries, opts.int_tol, &opts.branch_priority);
      if (frac_col < 0) {
        if (!have_incumbent || lp.objective < inc_obj) {
          have_incumbent = true;
          inc_obj = lp.objective;
          inc_x = lp.x;
        }
        return;
      }
      for (int col : model.binaries) {
        const double v = lp.x(col);
        if (v <= opts.int_tol)
          solver.set_bounds(col, 0.0, 0.0);
        else if (v >= 1.0 - opts.int_tol)
          solver.set_bounds(col, 1.0, 1.0);
        else if (col == frac_col) {
          const double fix = v >= 0.5 ? 1.0 : 0.0;
          solver.set_bounds(col, fix, fix);
        }
      }
      lp = solver.solve();
      if (lp.status != LpStatus::Optimal) return;
    }
  };
  if (opts.root_dive && nb > 0) try_dive();

  // Best-bound selection with plunging: the better child of an expanded node
  // is processed immediately (one bound change between consecutive solves),
  // its sibling goes to the heap keyed by the parent relaxation bound.
  long dive_index = -1;
  double dive_bound = -kInf;
  while (dive_index >= 0 || !heap.empty()) {
    if (res.nodes >= opts.node_limit) {
      res.best_bound = heap.empty() ? inc_obj : heap.top().bound;
      return finish(MilpStatus::NodeLimit);
    }

    size_t index;
    double entry_bound;
    if (dive_index >= 0) {
      index = static_cast<size_t>(dive_index);
      entry_bound = dive_bound;
      dive_index = -1;
    } else {
      const HeapEntry top = heap.top();
      heap.pop();
      index = top.index;
      entry_bound = top.bound;
      if (have_incumbent && top.bound >= inc_obj - gap_slack()) {
        // Every remaining node is at least as bad; the incumbent is optimal.
        res.best_bound = top.bound;
        return finish(MilpStatus::Optimal);
      }
    }
    if (have_incumbent && entry_bound >= inc_obj - gap_slack()) continue;

    apply_node_bounds(index);
    const LpResult lp = solver.solve();
    ++res.nodes;
    static const bool log = std::getenv("POLYFLOW_BNB_LOG") != nullptr;
    if (log && res.nodes % 25 == 0)
      std::fprintf(stderr, "  node %ld: lp obj %.6f iters %ld, incumbent %s%.6f, open %zu\n",
                   res.nodes, lp.objective, lp.iterations,
                   have_incumbent ? "" : "none ", have_incumbent ? inc_obj : 0.0, heap.size());

    if (lp.status == LpStatus::Infeasible) continue;
    if (lp.status == LpStatus::Unbounded) {
      if (index == 0) return finish(MilpStatus::Unbounded);
      return finish(MilpStatus::Numerical);
    }
    if (lp.status != LpStatus::Optimal) {
      if (log)
        std::fprintf(stderr, "  node %ld: lp status %d after %ld iterations\n", res.nodes,
                     static_cast<int>(lp.status), lp.iterations);
      return finish(MilpStatus::Numerical);
    }
    if (have_incumbent && lp.objective >= inc_obj - gap_slack()) continue;

    const int frac_col = most_fractional(lp.x, model.binaries, opts.int_tol, &opts.branch_priority);
    if (frac_col < 0) {
      if (!have_incumbent || lp.objective < inc_obj) {
        have_incumbent = true;
        inc_obj = lp.objective;
        inc_x = lp.x;
      }
      continue;
    }

    const double frac = lp.x(frac_col) - std::floor(lp.x(frac_col));
    const double first_fix = frac >= 0.5 ? 1.0 : 0.0;
    for (const double fix : {first_fix, 1.0 - first_fix}) {
      Node child;
      child.parent = static_cast<int>(index);
      child.col = frac_col;
      child.fix = fix;
      child.bound = lp.objective;
      child.id = next_id++;
      if (fix == first_fix) {
        dive_index = static_cast<long>(pool.size());
        dive_bound = child.bound;
      } else {
        heap.push({child.bound, child.id, pool.size()});
      }
      pool.push_back(child);
    }
  }

  res.best_bound = inc_obj;
  return finish(have_incumbent ? MilpStatus::Optimal : MilpStatus::Infeasible);
}

ActivationBounds activation_intervals(const nn::MlpParams& p, const data::DomainBox& box_raw) {
  if (box_raw.dim() != p.input_dim())
    throw std::invalid_argument("activation_intervals: box dimension mismatch");
  if (!box_raw.lo.allFinite() || !box_raw.hi.allFinite())
    throw std::invalid_argument("activation_intervals: domain box must be bounded");
  const data::DomainBox box = pwl::scale_box(box_raw, p.scaler);
  Vec s_lo = box.lo, s_hi = box.hi;
  ActivationBounds out;
  out.z_lo = Vec(p.total_neurons());
  out.z_hi = Vec(p.total_neurons());
  int at = 0;
  for (int l = 0; l < p.hidden_layers(); ++l) {
    const Mat& w = p.w[static_cast<size_t>(l)];
    const Vec& b = p.b[static_cast<size_t>(l)];
    Vec z_lo(w.rows()), z_hi(w.rows());
    for (int k = 0; k < w.rows(); ++k) {
      double lo_acc = b(k), hi_acc = b(k);
      for (int j = 0; j < w.cols(); ++j) {
        const double v = w(k, j);
        if (v >= 0.0) {
          lo_acc += v * s_lo(j);
          hi_acc += v * s_hi(j);
        } else {
          lo_acc += v * s_hi(j);
          hi_acc += v * s_lo(j);
        }
      }
      z_lo(k) = lo_acc;
      z_hi(k) = hi_acc;
      out.z_lo(at) = lo_acc;
      out.z_hi(at) = hi_acc;
      ++at;
    }
    s_lo = z_lo.cwiseMax(0.0);
    s_hi = z_hi.cwiseMax(0.0);
  }
  out.out_lo = p.b_out;
  out.out_hi = p.b_out;
  for (int j = 0; j < p.w_out.size(); ++j) {
    const double v = p.w_out(j);
    if (v >= 0.0) {
      out.out_lo += v * s_lo(j);
      out.out_hi += v * s_hi(j);
    } else {
      out.out_lo += v * s_hi(j);
      out.out_hi += v * s_lo(j);
    }
  }
  return out;
}

Vec big_m_bounds(const nn::MlpParams& p, const data::DomainBox& box_raw) {
  const ActivationBounds b = activation_intervals(p, box_raw);
  Vec m(b.z_lo.size());
  for (int k = 0; k < m.size(); ++k)
    m(k) = std::max(std::abs(b.z_lo(k)), std::abs(b.z_hi(k))) + 1e-6;
  return m;
}

ActivationBounds tighten_intervals(const nn::MlpParams& p, const data::DomainBox& box_raw,
                                   int passes) {
  ActivationBounds iv = activation_intervals(p, box_raw);
  const data::DomainBox box = pwl::scale_box(box_raw, p.scaler);
  const int d = p.input_dim();

  for (int pass = 0; pass < passes; ++pass) {
    // Rectifier relaxation under the current ranges, no integrality.
    LinearProgram lp;
    std::vector<int> in_cols;
    for (int j = 0; j < d; ++j) in_cols.push_back(lp.add_col("x", box.lo(j), box.hi(j)));
    std::vector<std::vector<int>> layer_in{in_cols};
    int at = 0;
    for (int l = 0; l < p.hidden_layers(); ++l) {
      const Mat& w = p.w[static_cast<size_t>(l)];
      const Vec& b = p.b[static_cast<size_t>(l)];
      std::vector<int> units;
      for (int k = 0; k < w.rows(); ++k) {
        const double z_lo = iv.z_lo(at), z_hi = iv.z_hi(at);
        ++at;
        const int s = lp.add_col("s", 0.0, std::max(z_hi, 0.0) + 1e-9);
        const int r = lp.add_col("r", 0.0, std::max(-z_lo, 0.0) + 1e-9);
        std::vector<std::pair<int, double>> row{{s, 1.0}, {r, -1.0}};
        for (int j = 0; j < w.cols(); ++j)
          if (w(k, j) != 0.0)
            row.push_back({layer_in.back()[static_cast<size_t>(j)], -w(k, j)});
        lp.add_row(std::move(row), RowSense::EQ, b(k));
        if (z_lo < 0.0 && z_hi > 0.0) {
          const double slope = z_hi / (z_hi - z_lo);
          std::vector<std::pair<int, double>> cap{{s, 1.0}};
          for (int j = 0; j < w.cols(); ++j)
            if (w(k, j) != 0.0)
              cap.push_back({layer_in.back()[static_cast<size_t>(j)], -slope * w(k, j)});
          lp.add_row(std::move(cap), RowSense::LE, slope * (b(k) - z_lo) + 1e-9);
        }
        units.push_back(s);
      }
      layer_in.push_back(std::move(units));
    }

    SimplexSolver solver(lp);
    auto range_of = [&](const std::vector<int>& cols, const Vec& weights, double offset,
                        double& lo, double& hi) {
      for (int j = 0; j < lp.cols(); ++j) solver.set_cost(j, 0.0);
      for (int j = 0; j < weights.size(); ++j)
        if (weights(j) != 0.0) solver.set_cost(cols[static_cast<size_t>(j)], weights(j));
      const auto min_res = solver.solve();
      if (min_res.status == LpStatus::Optimal) lo = std::max(lo, min_res.objective + offset);
      for (int j = 0; j < weights.size(); ++j)
        if (weights(j) != 0.0) solver.set_cost(cols[static_cast<size_t>(j)], -weights(j));
      const auto max_res = solver.solve();
      if (max_res.status == LpStatus::Optimal) hi = std::min(hi, -max_res.objective + offset);
    };

    at = 0;
    for (int l = 0; l < p.hidden_layers(); ++l) {
      const Mat& w = p.w[static_cast<size_t>(l)];
      for (int k = 0; k < w.rows(); ++k) {
        double lo = iv.z_lo(at), hi = iv.z_hi(at);
        range_of(layer_in[static_cast<size_t>(l)], w.row(k).transpose(),
                 p.b[static_cast<size_t>(l)](k), lo, hi);
        if (lo > hi) lo = hi = 0.5 * (lo + hi);  // numerically crossed; collapse
        iv.z_lo(at) = lo;
        iv.z_hi(at) = hi;
        ++at;
      }
    }
    double out_lo = iv.out_lo, out_hi = iv.out_hi;
    range_of(layer_in.back(), p.w_out, p.b_out, out_lo, out_hi);
    iv.out_lo = out_lo;
    iv.out_hi = out_hi;
  }
  return iv;
}

MlpEncoding encode_mlp_bigm(MilpModel& model, const nn::MlpParams& p,
                            const std::vector<int>& input_cols, int output_col,
                            const Vec& m_values, const ActivationBounds* intervals) {
  p.check_shapes();
  if (static_cast<int>(input_cols.size()) != p.input_dim())
    throw std::invalid_argument("encode_mlp_bigm: input column count mismatch");
  if (m_values.size() != p.total_neurons())
    throw std::invalid_argument("encode_mlp_bigm: one M value per neuron required");
  LinearProgram& lp = model.lp;
  MlpEncoding enc;

  // Scaled-input columns tied to the raw features: scale * xs = x - shift.
  if (p.scaler.is_identity()) {
    enc.scaled_input_cols = input_cols;
  } else {
    for (int j = 0; j < p.input_dim(); ++j) {
      const int xs = lp.add_col("mlp_xs" + std::to_string(j), -kInf, kInf);
      lp.add_row({{xs, p.scaler.scale(j)}, {input_cols[static_cast<size_t>(j)], -1.0}},
                 RowSense::EQ, -p.scaler.shift(j));
      enc.scaled_input_cols.push_back(xs);
    }
  }

  int at = 0;
  std::vector<int> prev = enc.scaled_input_cols;
  for (int l = 0; l < p.hidden_layers(); ++l) {
    const Mat& w = p.w[static_cast<size_t>(l)];
    const Vec& b = p.b[static_cast<size_t>(l)];
    std::vector<int> layer_units;
    for (int k = 0; k < w.rows(); ++k) {
      const double m = m_values(at);
      // Activation split bounds: s covers the positive part, r the negative.
      double s_up = m, r_up = m;
      double z_lo = -m, z_hi = m;
      if (intervals) {
        z_lo = intervals->z_lo(at);
        z_hi = intervals->z_hi(at);
        s_up = std::min(m, std::max(z_hi, 0.0) + 1e-6);
        r_up = std::min(m, std::max(-z_lo, 0.0) + 1e-6);
      }
      ++at;
      const std::string tag = std::to_string(l) + "_" + std::to_string(k);
      const int s = lp.add_col("mlp_s" + tag, 0.0, s_up);
      const int r = lp.add_col("mlp_r" + tag, 0.0, r_up);
      const int mu = lp.add_col("mlp_mu" + tag, 0.0, 1.0);
      model.binaries.push_back(mu);
      enc.unit_cols.push_back(s);
      enc.slack_cols.push_back(r);
      enc.binary_cols.push_back(mu);
      // s - r = w . input + b
      std::vector<std::pair<int, double>> row{{s, 1.0}, {r, -1.0}};
      for (int j = 0; j < w.cols(); ++j)
        if (w(k, j) != 0.0) row.push_back({prev[static_cast<size_t>(j)], -w(k, j)});
      lp.add_row(std::move(row), RowSense::EQ, b(k));
      lp.add_row({{s, 1.0}, {mu, -s_up}}, RowSense::LE, 0.0);
      lp.add_row({{r, 1.0}, {mu, r_up}}, RowSense::LE, r_up);
      if (intervals) {
        if (z_lo >= 0.0) {
          // Stable-on neuron: the selector carries no decision.
          lp.lo(mu) = 1.0;
        } else if (z_hi <= 0.0) {
          lp.up(mu) = 0.0;
        } else {
          // Convex-hull cap on the active part over [z_lo, z_hi]:
          // s <= z_hi (z - z_lo) / (z_hi - z_lo), with z = w . input + b.
          const double slope = z_hi / (z_hi - z_lo);
          std::vector<std::pair<int, double>> cap{{s, 1.0}};
          for (int j = 0; j < w.cols(); ++j)
            if (w(k, j) != 0.0) cap.push_back({prev[static_cast<size_t>(j)], -slope * w(k, j)});
          lp.add_row(std::move(cap), RowSense::LE, slope * (b(k) - z_lo) + 1e-9);
        }
      }
      layer_units.push_back(s);
    }
    prev = std::move(layer_units);
  }

  // Output tie: out = w_out . top + b_out.
  std::vector<std::pair<int, double>> out_row{{output_col, 1.0}};
  for (int j = 0; j < p.w_out.size(); ++j)
    if (p.w_out(j) != 0.0) out_row.push_back({prev[static_cast<size_t>(j)], -p.w_out(j)});
  lp.add_row(std::move(out_row), RowSense::EQ, p.b_out);
  if (intervals) {
    lp.lo(output_col) = std::max(lp.lo(output_col), intervals->out_lo - 1e-6);
    lp.up(output_col) = std::min(lp.up(output_col), intervals->out_hi + 1e-6);
  }
  return enc;
}

UnionEncoding encode_region_union(MilpModel& model, const std::vector<pwl::Polytope>& polys,
                                  const std::vector<int>& input_cols, double m_copy) {
  if (polys.empty()) throw std::invalid_argument("encode_region_union: empty union");
  const int d = polys.front().dim();
  if (static_cast<int>(input_cols.size()) != d)
    throw std::invalid_argument("encode_region_union: input column count mismatch");
  LinearProgram& lp = model.lp;
  UnionEncoding enc;

  for (size_t k = 0; k < polys.size(); ++k) {
    const auto& poly = polys[k];
    if (poly.dim() != d) throw std::invalid_argument("encode_region_union: dimension mismatch");
    const std::string tag = std::to_string(k);
    const int z = lp.add_col("union_z" + tag, 0.0, 1.0);
    model.binaries.push_back(z);
    enc.selector_cols.push_back(z);
    std::vector<int> copy;
    for (int j = 0; j < d; ++j)
      copy.push_back(lp.add_col("union_x" + tag + "_" + std::to_string(j), -m_copy, m_copy));
    // Where the system carries its own two-sided domain rows for a dimension,
    // those rows already collapse the copy with the selector.
    std::vector<int> dom_lo(static_cast<size_t>(d), 0), dom_hi(static_cast<size_t>(d), 0);
    // Polytope rows switch off with the selector: A x_k <= z beta.
    for (int r = 0; r < poly.rows(); ++r) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < d; ++j)
        if (poly.a(r, j) != 0.0) row.push_back({copy[static_cast<size_t>(j)], poly.a(r, j)});
      if (poly.origins[static_cast<size_t>(r)].kind == pwl::RowKind::Domain && row.size() == 1) {
        const int j = poly.origins[static_cast<size_t>(r)].neuron;
        if (j >= 0 && j < d) {
          // A two-sided pair pins the copy to zero when unselected.
          if (poly.a(r, j) > 0.0) dom_hi[static_cast<size_t>(j)] = 1;
          if (poly.a(r, j) < 0.0) dom_lo[static_cast<size_t>(j)] = 1;
        }
      }
      row.push_back({z, -poly.beta(r)});
      lp.add_row(std::move(row), RowSense::LE, 0.0);
    }
    // Fallback collapse for uncovered dimensions: -M z <= x_k <= M z.
    for (int j = 0; j < d; ++j) {
      if (dom_lo[static_cast<size_t>(j)] && dom_hi[static_cast<size_t>(j)]) continue;
      lp.add_row({{copy[static_cast<size_t>(j)], 1.0}, {z, -m_copy}}, RowSense::LE, 0.0);
      lp.add_row({{copy[static_cast<size_t>(j)], -1.0}, {z, -m_copy}}, RowSense::LE, 0.0);
    }
    enc.copy_cols.push_back(std::move(copy));
  }

  // Copies reassemble the input; exactly one region is active.
  for (int j = 0; j < d; ++j) {
    std::vector<std::pair<int, double>> row{{input_cols[static_cast<size_t>(j)], -1.0}};
    for (const auto& copy : enc.copy_cols) row.push_back({copy[static_cast<size_t>(j)], 1.0});
    lp.add_row(std::move(row), RowSense::EQ, 0.0);
  }
  std::vector<std::pair<int, double>> ones;
  for (int z : enc.selector_cols) ones.push_back({z, 1.0});
  lp.add_row(std::move(ones), RowSense::EQ, 1.0);
  return enc;
}

}  // namespace polyflow::opt
