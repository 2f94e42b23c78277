#pragma once

#include <cstdint>
#include <vector>

#include "polyflow/grid.hpp"
#include "polyflow/linalg.hpp"
#include "polyflow/rng.hpp"
#include "polyflow/scenario.hpp"

namespace polyflow::data {

struct Sample {
  Vec x;
  double h = 0.0;
  double p_loss = 0.0;
};

struct DomainBox {
  Vec lo;
  Vec hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double tol = 0.0) const;
};

// Per-feature operating ranges used by the sampler: monitored demands span
// the base profile plus the largest possible HVAC draw, DG output spans zero
// to the scaled availability peak.
struct SampleRanges {
  Vec lo;
  Vec hi;
};

SampleRanges operating_ranges(const scen::Scenario& sc, double base_mva,
                              double dg_scale_max = 1.0);

std::vector<Vec> sample_inputs(const SampleRanges& ranges, int n, uint64_t seed);

struct LabelStats {
  int dropped = 0;  // inputs whose power flow failed to converge
};

// Grounds each input in the physics: solves the power flow and attaches the
// violation measure and total loss. Non-convergent inputs are skipped.
std::vector<Sample> label_dataset(const grid::RadialNetwork& net, const scen::Scenario& sc,
                                  const std::vector<Vec>& xs, LabelStats* stats = nullptr);

DomainBox estimate_domain_box(const std::vector<Vec>& xs, double margin);

}  // namespace polyflow::data
