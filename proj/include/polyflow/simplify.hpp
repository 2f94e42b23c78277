#pragma once

#include <optional>
#include <vector>

#include "polyflow/pwl.hpp"

namespace polyflow::simplify {

struct FeasibilityCheck {
  bool feasible = false;
  Vec witness;  // a point satisfying every row, when feasible
};

// Phase-one feasibility of a row system (the system must already contain its
// domain rows). Solver trouble surfaces as an exception, never as a silent
// "infeasible".
FeasibilityCheck region_feasible(const pwl::Polytope& poly);

struct PrunedRegion {
  pwl::RegionInfo region;
  Vec witness;
  size_t source_index = 0;  // position in the candidate list
};

// Keeps regions that cover at least one sample and admit a feasible point;
// preserves input order. Throws if nothing survives.
std::vector<PrunedRegion> prune_regions(const std::vector<pwl::RegionInfo>& regions);

struct SimplifyStats {
  int rows_before = 0;  // non-domain rows
  int rows_after = 0;
  int removed = 0;
  // Copies of the deleted rows, for post-hoc soundness checks.
  std::vector<std::pair<Vec, double>> removed_rows;
};

// Iterated redundancy removal: maximize each row over all the others (domain
// rows always kept as context); a row whose maximum stays within tolerance of
// its own bound is dropped and the scan restarts.
pwl::Polytope remove_redundant_rows(const pwl::Polytope& poly, double tol = 1e-7,
                                    SimplifyStats* stats = nullptr);

}  // namespace polyflow::simplify
