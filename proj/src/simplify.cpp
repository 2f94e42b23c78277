#include "polyflow/simplify.hpp"

#include <stdexcept>

#include "polyflow/lp.hpp"

namespace polyflow::simplify {

namespace {

opt::LinearProgram system_lp(const pwl::Polytope& poly) {
  opt::LinearProgram lp;
  for (int j = 0; j < poly.dim(); ++j)
    lp.add_col("x" + std::to_string(j), -kInf, kInf);
  for (int r = 0; r < poly.rows(); ++r) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < poly.dim(); ++j)
      if (poly.a(r, j) != 0.0) row.push_back({j, poly.a(r, j)});
    lp.add_row(std::move(row), opt::RowSense::LE, poly.beta(r));
  }
  return lp;
}

}  // namespace

FeasibilityCheck region_feasible(const pwl::Polytope& poly) {
  opt::LinearProgram lp = system_lp(poly);
  const opt::LpResult res = opt::simplex_solve(lp);
  FeasibilityCheck out;
  if (res.status == opt::LpStatus::Optimal) {
    out.feasible = true;
    out.witness = res.x;
    return out;
  }
  if (res.status == opt::LpStatus::Infeasible) return out;
  throw std::runtime_error("region_feasible: linear solver failed on the region system");
}

std::vector<PrunedRegion> prune_regions(const std::vector<pwl::RegionInfo>& regions) {
  std::vector<PrunedRegion> kept;
  for (size_t i = 0; i < regions.size(); ++i) {
    const auto& region = regions[i];
    if (region.sample_count < 1) continue;
    const auto check = region_feasible(region.poly);
    if (!check.feasible) continue;
    kept.push_back({region, check.witness, i});
  }
  if (kept.empty())
    throw std::runtime_error("prune_regions: no region survived; nothing feasible was learned");
  return kept;
}

pwl::Polytope remove_redundant_rows(const pwl::Polytope& poly, double tol, SimplifyStats* stats) {
  pwl::Polytope cur = poly;
  if (stats) {
    stats->rows_before = cur.non_domain_rows();
    stats->removed = 0;
  }

  bool removed_one = true;
  while (removed_one) {
    removed_one = false;
    for (int i = 0; i < cur.rows(); ++i) {
      if (cur.origins[static_cast<size_t>(i)].kind == pwl::RowKind::Domain) continue;
      // Maximize row i over all the remaining rows.
      opt::LinearProgram lp;
      for (int j = 0; j < cur.dim(); ++j)
        lp.add_col("x" + std::to_string(j), -kInf, kInf, -cur.a(i, j));  // maximize => minimize -a
      for (int r = 0; r < cur.rows(); ++r) {
        if (r == i) continue;
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < cur.dim(); ++j)
          if (cur.a(r, j) != 0.0) row.push_back({j, cur.a(r, j)});
        lp.add_row(std::move(row), opt::RowSense::LE, cur.beta(r));
      }
      const opt::LpResult res = opt::simplex_solve(lp);
      if (res.status == opt::LpStatus::Unbounded)
        throw std::runtime_error(
            "remove_redundant_rows: unbounded row maximization; domain rows missing");
      if (res.status == opt::LpStatus::Infeasible)
        throw std::runtime_error("remove_redundant_rows: system became infeasible");
      if (res.status != opt::LpStatus::Optimal)
        throw std::runtime_error("remove_redundant_rows: linear solver failed");
      const double reach = -res.objective;
      if (reach <= cur.beta(i) + tol) {
        if (stats) stats->removed_rows.push_back({cur.a.row(i).transpose(), cur.beta(i)});
        // Row i cannot be violated inside the rest of the system: drop it
        // and restart the scan, since removals can wake other rows up.
        const int nr = cur.rows() - 1;
        pwl::Polytope next;
        next.a = Mat(nr, cur.dim());
        next.beta = Vec(nr);
        next.origins.reserve(static_cast<size_t>(nr));
        int at = 0;
        for (int r = 0; r < cur.rows(); ++r) {
          if (r == i) continue;
          next.a.row(at) = cur.a.row(r);
          next.beta(at) = cur.beta(r);
          next.origins.push_back(cur.origins[static_cast<size_t>(r)]);
          ++at;
        }
        cur = std::move(next);
        if (stats) ++stats->removed;
        removed_one = true;
        break;
      }
    }
  }
  if (stats) stats->rows_after = cur.non_domain_rows();
  return cur;
}

}  // namespace polyflow::simplify
