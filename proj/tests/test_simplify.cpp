#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polyflow/rng.hpp"
#include "polyflow/simplify.hpp"

using namespace polyflow;
using namespace polyflow::pwl;
using namespace polyflow::simplify;

namespace {

Polytope make_poly(const Mat& a, const Vec& beta, int domain_rows_from = -1) {
  Polytope p;
  p.a = a;
  p.beta = beta;
  for (int r = 0; r < a.rows(); ++r) {
    RowOrigin o;
    o.kind = (domain_rows_from >= 0 && r >= domain_rows_from) ? RowKind::Domain : RowKind::Neuron;
    p.origins.push_back(o);
  }
  return p;
}

// Unit box rows in 2-D tagged as domain context.
Polytope with_unit_box(const Mat& extra_a, const Vec& extra_b) {
  const int k = static_cast<int>(extra_a.rows());
  Mat a(k + 4, 2);
  Vec b(k + 4);
  a.topRows(k) = extra_a;
  b.head(k) = extra_b;
  a.row(k) << 1.0, 0.0;
  b(k) = 1.0;
  a.row(k + 1) << -1.0, 0.0;
  b(k + 1) = 0.0;
  a.row(k + 2) << 0.0, 1.0;
  b(k + 2) = 1.0;
  a.row(k + 3) << 0.0, -1.0;
  b(k + 3) = 0.0;
  return make_poly(a, b, k);
}

}  // namespace

TEST_CASE("region feasibility witness and certificates") {
  // x <= 0 together with x >= 1 has no point.
  Mat a(2, 1);
  a << 1.0, -1.0;
  Vec b(2);
  b << 0.0, -1.0;
  CHECK(!region_feasible(make_poly(a, b)).feasible);

  // The unit interval is feasible and the witness lies inside it.
  Mat box(2, 1);
  box << 1.0, -1.0;
  Vec bb(2);
  bb << 1.0, 0.0;
  const auto res = region_feasible(make_poly(box, bb));
  REQUIRE(res.feasible);
  CHECK(res.witness(0) >= -1e-9);
  CHECK(res.witness(0) <= 1.0 + 1e-9);

  // Interval region {x >= 0, x <= 0.5} inside a [-1, 1] domain.
  Mat ia(4, 1);
  ia << -1.0, 1.0, 1.0, -1.0;
  Vec ib(4);
  ib << 0.0, 0.5, 1.0, 1.0;
  const auto ires = region_feasible(make_poly(ia, ib, 2));
  REQUIRE(ires.feasible);
  CHECK(ires.witness(0) >= -1e-9);
  CHECK(ires.witness(0) <= 0.5 + 1e-9);
}

TEST_CASE("pruning keeps sampled feasible regions in order") {
  Mat a(2, 1);
  a << 1.0, -1.0;
  Vec feas_b(2);
  feas_b << 1.0, 0.0;
  Vec infeas_b(2);
  infeas_b << -2.0, 1.0;  // x <= -2 and x >= -1: empty

  RegionInfo sampled_feasible;
  sampled_feasible.poly = make_poly(a, feas_b);
  sampled_feasible.sample_count = 5;
  sampled_feasible.pattern.signs = {{1}};

  RegionInfo unsampled_feasible = sampled_feasible;
  unsampled_feasible.sample_count = 0;
  unsampled_feasible.pattern.signs = {{-1}};

  RegionInfo sampled_infeasible;
  sampled_infeasible.poly = make_poly(a, infeas_b);
  sampled_infeasible.sample_count = 3;
  sampled_infeasible.pattern.signs = {{1}};

  const auto kept = prune_regions({sampled_feasible, unsampled_feasible, sampled_infeasible});
  REQUIRE(kept.size() == 1);
  CHECK(kept.front().region.sample_count == 5);

  CHECK_THROWS(prune_regions({unsampled_feasible, sampled_infeasible}));
}

TEST_CASE("redundant rows are removed and removals stay sound") {
  // x1 + x2 <= 3 can never bind over the unit box.
  Mat extra(1, 2);
  extra << 1.0, 1.0;
  Vec eb(1);
  eb << 3.0;
  SimplifyStats stats;
  const auto slim = remove_redundant_rows(with_unit_box(extra, eb), 1e-7, &stats);
  CHECK(stats.rows_before == 1);
  CHECK(stats.rows_after == 0);
  CHECK(stats.removed == 1);
  CHECK(slim.rows() == 4);  // domain rows stay

  // A duplicated row loses exactly one copy.
  Mat dup(2, 2);
  dup << 1.0, 0.0, 1.0, 0.0;
  Vec db(2);
  db << 0.7, 0.7;
  SimplifyStats s2;
  const auto slim2 = remove_redundant_rows(with_unit_box(dup, db), 1e-7, &s2);
  CHECK(s2.rows_before == 2);
  CHECK(s2.rows_after == 1);

  // Tight rows survive: x1 <= 0.5 binds inside the box.
  Mat tight(1, 2);
  tight << 1.0, 0.0;
  Vec tb(1);
  tb << 0.5;
  SimplifyStats s3;
  const auto slim3 = remove_redundant_rows(with_unit_box(tight, tb), 1e-7, &s3);
  CHECK(s3.rows_after == 1);
  CHECK(s3.removed == 0);
  (void)slim3;
}

TEST_CASE("set preservation under row removal") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    // Random rows over the unit box, some redundant by construction.
    const int k = 6;
    Mat a(k, 2);
    Vec b(k);
    for (int r = 0; r < k; ++r) {
      a(r, 0) = rng.uniform(-1.0, 1.0);
      a(r, 1) = rng.uniform(-1.0, 1.0);
      b(r) = rng.uniform(0.2, 2.5);
    }
    const Polytope orig = with_unit_box(a, b);
    if (!region_feasible(orig).feasible) continue;
    const Polytope slim = remove_redundant_rows(orig);
    for (int probe = 0; probe < 10000; ++probe) {
      Vec x(2);
      x << rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2);
      CHECK(orig.contains(x, 1e-9) == slim.contains(x, 1e-9));
    }
  }
}
