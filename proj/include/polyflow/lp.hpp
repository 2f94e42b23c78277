#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "polyflow/linalg.hpp"

namespace polyflow::opt {

enum class RowSense { LE, EQ };

// Sparse row-oriented program: minimize c.x subject to row senses and
// per-column bounds (infinities allowed on either side).
struct LinearProgram {
  struct Row {
    std::vector<std::pair<int, double>> coef;
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
  };

  Vec c;
  Vec lo;
  Vec up;
  std::vector<Row> rows;
  std::vector<std::string> col_names;

  int cols() const { return static_cast<int>(c.size()); }
  int row_count() const { return static_cast<int>(rows.size()); }

  int add_col(const std::string& name, double lo_bound, double up_bound, double cost = 0.0);
  int add_row(std::vector<std::pair<int, double>> coef, RowSense sense, double rhs);
  void set_cost(int col, double cost) { c(col) = cost; }

  std::string to_text() const;  // human-readable dump for debugging
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, Numerical };

struct LpResult {
  LpStatus status = LpStatus::Numerical;
  double objective = 0.0;
  Vec x;
  long iterations = 0;
};

// Bounded-variable revised simplex over a fixed row structure. Bounds may be
// changed between solves; the basis is kept, so nearby re-solves are cheap.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp);

  LpResult solve(long iteration_limit = 200000);

  void set_bounds(int col, double lo_bound, double up_bound);
  void set_cost(int col, double cost) { cost_(col) = cost; }
  double lower(int col) const { return lo_(col); }
  double upper(int col) const { return up_(col); }

 private:
  enum class VStat : unsigned char { Basic, AtLower, AtUpper, Free };

  struct Eta {
    int row;
    Vec w;  // entering column in the basis frame at pivot time
  };

  int n_ = 0;  // structural columns
  int m_ = 0;  // rows
  Vec cost_;
  Vec lo_, up_;  // length n_ + m_ including logicals
  Vec rhs_;
  std::vector<std::vector<std::pair<int, double>>> col_entries_;  // structural columns by row

  std::vector<int> basic_;
  std::vector<VStat> stat_;
  Vec x_;

  // Basis factorization: sparse LU of B and B^T plus product-form updates.
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_t_;
  bool factor_ok_ = false;
  std::vector<Eta> etas_;

  void install_slack_basis();
  bool refactorize();
  void compute_basics();
  void ftran(Vec& v) const;  // v <- B^-1 v
  void btran(Vec& v) const;  // v <- B^-T v
  double column_value(int col, const Vec& v) const;  // v . a_col
  void column_times(int col, Vec& out) const;        // out = B^-1 a_col
  double infeasibility(int row_pos) const;
  double total_infeasibility() const;

  // One dual pivot (or nonbasic bound flip) toward primal feasibility; used
  // to warm-restart after bound changes. Correctness never depends on it.
  enum class DualStep { Progress, GiveUp, Numerical };
  DualStep dual_step(long& budget);
};

LpResult simplex_solve(const LinearProgram& lp, long iteration_limit = 200000);

}  // namespace polyflow::opt
