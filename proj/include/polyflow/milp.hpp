#pragma once

#include <optional>
#include <vector>

#include "polyflow/dataset.hpp"
#include "polyflow/lp.hpp"
#include "polyflow/mlp.hpp"
#include "polyflow/pwl.hpp"

namespace polyflow::opt {

struct MilpModel {
  LinearProgram lp;
  std::vector<int> binaries;
};

enum class MilpStatus { Optimal, Infeasible, Unbounded, NodeLimit, Numerical };

struct SolveResult {
  MilpStatus status = MilpStatus::Numerical;
  double objective = 0.0;
  Vec x;
  long nodes = 0;
  double best_bound = -kInf;
  double wall_seconds = 0.0;
};

struct BnbOptions {
  long node_limit = 1000000;
  double abs_gap = 1e-6;
  // Optional relative termination gap; zero keeps the search exact.
  double rel_gap = 0.0;
  double int_tol = 1e-6;
  // Depth-first rounding pass after the root solve to seed the incumbent.
  bool root_dive = true;
  // Caller-supplied consistent binary assignment tried before the search.
  std::vector<std::pair<int, double>> warm_fixings;
  // Optional per-column branching priority (higher first); most-fractional
  // breaks ties within a priority class.
  std::vector<int> branch_priority;
};

// Exact search: best-bound node selection, branching on the binary whose
// relaxation value is closest to one half.
SolveResult branch_and_bound(const MilpModel& model, const BnbOptions& opts = {});

// Interval propagation of the domain box through the network: valid ranges
// for every pre-activation and for the output.
struct ActivationBounds {
  Vec z_lo;
  Vec z_hi;
  double out_lo = -kInf;
  double out_hi = kInf;
};

ActivationBounds activation_intervals(const nn::MlpParams& p, const data::DomainBox& box_raw);

// Sharper ranges: each pre-activation is minimized and maximized over the
// rectifier relaxation itself, a few passes deep. Box-propagation ranges are
// the starting point, so the result is always at least as tight.
ActivationBounds tighten_intervals(const nn::MlpParams& p, const data::DomainBox& box_raw,
                                   int passes = 2);

// Per-neuron switching constants from the same propagation; safe for the
// rectifier rows below (no true input/output pair is ever cut).
Vec big_m_bounds(const nn::MlpParams& p, const data::DomainBox& box_raw);

struct MlpEncoding {
  std::vector<int> scaled_input_cols;
  std::vector<int> unit_cols;    // one activation column per neuron
  std::vector<int> slack_cols;   // matching negative-part column
  std::vector<int> binary_cols;  // one selector per neuron
};

// Rectifier network as mixed-integer rows: per neuron s - r = (affine input),
// 0 <= s <= M mu, 0 <= r <= M (1 - mu). `input_cols` are raw-frame feature
// columns; the model's input scaling is folded in via tie rows. When the
// activation intervals are supplied, the split columns and the output column
// get their implied bounds, which tightens the relaxation without changing
// the feasible set.
MlpEncoding encode_mlp_bigm(MilpModel& model, const nn::MlpParams& p,
                            const std::vector<int>& input_cols, int output_col, const Vec& m_values,
                            const ActivationBounds* intervals = nullptr);

struct UnionEncoding {
  std::vector<int> selector_cols;            // one binary per polytope
  std::vector<std::vector<int>> copy_cols;   // per polytope, one copy of the input
};

// Input must lie in exactly one of the given polytopes. Each polytope gets a
// selector binary and a deactivatable copy of the input columns; copies sum
// to the input and selectors sum to one. Polytopes and input columns must
// share one coordinate frame. `m_copy` bounds |x| over the union's domain.
UnionEncoding encode_region_union(MilpModel& model, const std::vector<pwl::Polytope>& polys,
                                  const std::vector<int>& input_cols, double m_copy);

}  // namespace polyflow::opt
