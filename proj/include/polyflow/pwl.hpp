#pragma once

#include <map>
#include <string>
#include <vector>

#include "polyflow/dataset.hpp"
#include "polyflow/linalg.hpp"
#include "polyflow/mlp.hpp"

namespace polyflow::pwl {

// Per-layer activation signs: +1 where a rectifier's input is non-negative,
// -1 where it is negative. Ties (input exactly zero) count as active.
struct ActivationPattern {
  std::vector<std::vector<int>> signs;

  std::string key() const;  // canonical flat string, e.g. "+-+|++-"
  bool operator==(const ActivationPattern& o) const { return signs == o.signs; }
};

// Effective affine maps of the network restricted to one activation region:
// layer l input is w_eff[l] * x + b_eff[l]; the output is w_out . x + b_out.
struct RegionAffine {
  std::vector<Mat> w_eff;
  std::vector<Vec> b_eff;
  Vec w_out;
  double b_out = 0.0;

  double output_at(const Vec& x) const { return w_out.dot(x) + b_out; }
};

enum class RowKind { Neuron, Output, Domain };

struct RowOrigin {
  RowKind kind = RowKind::Neuron;
  int layer = -1;
  int neuron = -1;
};

// Half-space system a * x <= beta with per-row origin tags. Lives in the
// coordinate frame of whatever produced it (trained models emit rows in
// their scaled input frame; see to_raw_frame).
struct Polytope {
  Mat a;
  Vec beta;
  std::vector<RowOrigin> origins;

  int rows() const { return static_cast<int>(a.rows()); }
  int dim() const { return static_cast<int>(a.cols()); }
  int non_domain_rows() const;
  bool contains(const Vec& x, double tol = 1e-9) const;
  double max_violation(const Vec& x) const;  // max_i (a_i x - beta_i)
};

ActivationPattern activation_pattern(const nn::MlpParams& p, const Vec& x);

RegionAffine region_affine(const nn::MlpParams& p, const ActivationPattern& pat);

// Region system: one row per neuron keeping its rectifier input on the
// pattern's side, one row forcing the affine output non-positive, plus the
// domain box. Box must be given in the same frame as the rows.
Polytope feasible_polytope(const nn::MlpParams& p, const ActivationPattern& pat,
                           const data::DomainBox& box);

// Map the model's scaled input frame to the raw feature frame and back.
data::DomainBox scale_box(const data::DomainBox& raw, const nn::InputScaler& s);
Polytope to_raw_frame(const Polytope& poly, const nn::InputScaler& s);
RegionAffine to_raw_frame(const RegionAffine& aff, const nn::InputScaler& s);
Polytope to_scaled_frame(const Polytope& raw, const nn::InputScaler& s);

struct RegionInfo {
  ActivationPattern pattern;
  RegionAffine affine;
  Polytope poly;
  long sample_count = 0;
};

// Deduplicated activation regions hit by the given inputs, in first-seen
// order, each with its sample count and region system.
std::vector<RegionInfo> collect_sample_regions(const nn::MlpParams& p,
                                               const std::vector<Vec>& xs,
                                               const data::DomainBox& box_scaled);

}  // namespace polyflow::pwl
