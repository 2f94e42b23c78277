#include "polyflow/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace polyflow::opt {

namespace {
constexpr double kFeasTol = 1e-7;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr size_t kRefactorEvery = 32;  // product-form updates between refactorizations
constexpr long kStallLimit = 2000;     // degenerate pivots before Bland's rule
}  // namespace

int LinearProgram::add_col(const std::string& name, double lo_bound, double up_bound,
                           double cost) {
  const int j = cols();
  c.conservativeResize(j + 1);
  lo.conservativeResize(j + 1);
  up.conservativeResize(j + 1);
  c(j) = cost;
  lo(j) = lo_bound;
  up(j) = up_bound;
  col_names.push_back(name.empty() ? "c" + std::to_string(j) : name);
  return j;
}

int LinearProgram::add_row(std::vector<std::pair<int, double>> coef, RowSense sense, double rhs) {
  rows.push_back({std::move(coef), sense, rhs});
  return row_count() - 1;
}

std::string LinearProgram::to_text() const {
  std::ostringstream os;
  os << "min";
  for (int j = 0; j < cols(); ++j)
    if (c(j) != 0.0) os << (c(j) >= 0 ? " +" : " ") << c(j) << " " << col_names[static_cast<size_t>(j)];
  os << "\nsubject to\n";
  for (const auto& r : rows) {
    for (const auto& [j, v] : r.coef)
      os << (v >= 0 ? " +" : " ") << v << " " << col_names[static_cast<size_t>(j)];
    os << (r.sense == RowSense::LE ? " <= " : " == ") << r.rhs << "\n";
  }
  os << "bounds\n";
  for (int j = 0; j < cols(); ++j)
    os << "  " << lo(j) << " <= " << col_names[static_cast<size_t>(j)] << " <= " << up(j) << "\n";
  return os.str();
}

SimplexSolver::SimplexSolver(const LinearProgram& lp) {
  n_ = lp.cols();
  m_ = lp.row_count();
  cost_ = Vec::Zero(n_ + m_);
  cost_.head(n_) = lp.c;
  lo_ = Vec::Zero(n_ + m_);
  up_ = Vec::Zero(n_ + m_);
  lo_.head(n_) = lp.lo;
  up_.head(n_) = lp.up;
  rhs_ = Vec::Zero(m_);
  col_entries_.assign(static_cast<size_t>(n_), {});
  for (int i = 0; i < m_; ++i) {
    const auto& row = lp.rows[static_cast<size_t>(i)];
    rhs_(i) = row.rhs;
    for (const auto& [j, v] : row.coef) {
      if (j < 0 || j >= n_) throw std::invalid_argument("lp: row references unknown column");
      if (v != 0.0) col_entries_[static_cast<size_t>(j)].push_back({i, v});
    }
    // Logical column for row i: slack for <=, fixed at zero for ==.
    lo_(n_ + i) = 0.0;
    up_(n_ + i) = row.sense == RowSense::LE ? kInf : 0.0;
  }
  install_slack_basis();
}

void SimplexSolver::install_slack_basis() {
  basic_.assign(static_cast<size_t>(m_), 0);
  stat_.assign(static_cast<size_t>(n_ + m_), VStat::AtLower);
  x_ = Vec::Zero(n_ + m_);
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lo_(j))) {
      stat_[static_cast<size_t>(j)] = VStat::AtLower;
      x_(j) = lo_(j);
    } else if (std::isfinite(up_(j))) {
      stat_[static_cast<size_t>(j)] = VStat::AtUpper;
      x_(j) = up_(j);
    } else {
      stat_[static_cast<size_t>(j)] = VStat::Free;
      x_(j) = 0.0;
    }
  }
  for (int i = 0; i < m_; ++i) {
    basic_[static_cast<size_t>(i)] = n_ + i;
    stat_[static_cast<size_t>(n_ + i)] = VStat::Basic;
  }
  refactorize();
  compute_basics();
}

bool SimplexSolver::refactorize() {
  if (m_ == 0) {
    etas_.clear();
    factor_ok_ = true;
    return true;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(4 * m_));
  for (int i = 0; i < m_; ++i) {
    const int col = basic_[static_cast<size_t>(i)];
    if (col >= n_)
      trip.emplace_back(col - n_, i, 1.0);
    else
      for (const auto& [r, v] : col_entries_[static_cast<size_t>(col)]) trip.emplace_back(r, i, v);
  }
  Eigen::SparseMatrix<double> b(m_, m_);
  b.setFromTriplets(trip.begin(), trip.end());
  lu_.compute(b);
  if (lu_.info() != Eigen::Success) {
    factor_ok_ = false;
    return false;
  }
  const Eigen::SparseMatrix<double> bt = b.transpose();
  lu_t_.compute(bt);
  if (lu_t_.info() != Eigen::Success) {
    factor_ok_ = false;
    return false;
  }
  etas_.clear();
  factor_ok_ = true;
  return true;
}

void SimplexSolver::ftran(Vec& v) const {
  if (m_ == 0) return;
  const Vec solved = lu_.solve(v);
  v = solved;
  for (const Eta& e : etas_) {
    const double t = v(e.row) / e.w(e.row);
    if (t != 0.0) {
      v -= t * e.w;
      v(e.row) = t;
    } else {
      v(e.row) = 0.0;
    }
  }
}

void SimplexSolver::btran(Vec& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    const double dot = it->w.dot(v);
    v(it->row) = (v(it->row) - dot + it->w(it->row) * v(it->row)) / it->w(it->row);
  }
  const Vec solved = lu_t_.solve(v);
  v = solved;
}

void SimplexSolver::compute_basics() {
  Vec rhs_eff = rhs_;
  for (int j = 0; j < n_ + m_; ++j) {
    if (stat_[static_cast<size_t>(j)] == VStat::Basic || x_(j) == 0.0) continue;
    if (j >= n_)
      rhs_eff(j - n_) -= x_(j);
    else
      for (const auto& [r, v] : col_entries_[static_cast<size_t>(j)]) rhs_eff(r) -= v * x_(j);
  }
  ftran(rhs_eff);
  for (int i = 0; i < m_; ++i) x_(basic_[static_cast<size_t>(i)]) = rhs_eff(i);
}

void SimplexSolver::column_times(int col, Vec& out) const {
  out.setZero();
  if (col >= n_)
    out(col - n_) = 1.0;
  else
    for (const auto& [r, v] : col_entries_[static_cast<size_t>(col)]) out(r) = v;
  ftran(out);
}

double SimplexSolver::column_value(int col, const Vec& v) const {
  if (col >= n_) return v(col - n_);
  double acc = 0.0;
  for (const auto& [r, coef] : col_entries_[static_cast<size_t>(col)]) acc += coef * v(r);
  return acc;
}

double SimplexSolver::infeasibility(int row_pos) const {
  const int col = basic_[static_cast<size_t>(row_pos)];
  const double v = x_(col);
  if (v < lo_(col) - kFeasTol) return lo_(col) - v;
  if (v > up_(col) + kFeasTol) return v - up_(col);
  return 0.0;
}

double SimplexSolver::total_infeasibility() const {
  double acc = 0.0;
  for (int i = 0; i < m_; ++i) acc += infeasibility(i);
  return acc;
}

void SimplexSolver::set_bounds(int col, double lo_bound, double up_bound) {
  lo_(col) = lo_bound;
  up_(col) = up_bound;
  if (stat_[static_cast<size_t>(col)] == VStat::Basic) return;
  // Nonbasic variables must rest on a bound (or zero when free).
  if (std::isfinite(lo_bound) && (x_(col) <= lo_bound || !std::isfinite(up_bound))) {
    stat_[static_cast<size_t>(col)] = VStat::AtLower;
    x_(col) = lo_bound;
  } else if (std::isfinite(up_bound)) {
    stat_[static_cast<size_t>(col)] = VStat::AtUpper;
    x_(col) = up_bound;
  } else {
    stat_[static_cast<size_t>(col)] = VStat::Free;
    x_(col) = 0.0;
  }
}

SimplexSolver::DualStep SimplexSolver::dual_step(long& budget) {
  --budget;
  // True reduced costs.
  Vec y(m_);
  for (int i = 0; i < m_; ++i) y(i) = cost_(basic_[static_cast<size_t>(i)]);
  btran(y);

  // Bound-flip pass toward dual feasibility. A wrong-signed column without a
  // finite opposite bound cannot be repaired this way; flips applied so far
  // must still be reconciled before handing control back.
  bool flipped = false;
  bool unrepairable = false;
  for (int j = 0; j < n_ + m_; ++j) {
    const VStat st = stat_[static_cast<size_t>(j)];
    if (st == VStat::Basic) continue;
    if (up_(j) - lo_(j) <= 0.0) continue;  // fixed columns never move
    const double dj = cost_(j) - column_value(j, y);
    if (st == VStat::AtLower && dj < -kCostTol) {
      if (!std::isfinite(up_(j))) {
        unrepairable = true;
        continue;
      }
      stat_[static_cast<size_t>(j)] = VStat::AtUpper;
      x_(j) = up_(j);
      flipped = true;
    } else if (st == VStat::AtUpper && dj > kCostTol) {
      if (!std::isfinite(lo_(j))) {
        unrepairable = true;
        continue;
      }
      stat_[static_cast<size_t>(j)] = VStat::AtLower;
      x_(j) = lo_(j);
      flipped = true;
    } else if (st == VStat::Free && std::abs(dj) > kCostTol) {
      unrepairable = true;
    }
  }
  if (flipped) compute_basics();
  if (unrepairable) return DualStep::GiveUp;
  if (flipped) return DualStep::Progress;

  // Leaving row: the most violated basic.
  int leave_pos = -1;
  double worst = kFeasTol;
  bool below = true;
  for (int i = 0; i < m_; ++i) {
    const int col = basic_[static_cast<size_t>(i)];
    if (lo_(col) - x_(col) > worst) {
      worst = lo_(col) - x_(col);
      leave_pos = i;
      below = true;
    }
    if (x_(col) - up_(col) > worst) {
      worst = x_(col) - up_(col);
      leave_pos = i;
      below = false;
    }
  }
  if (leave_pos < 0) return DualStep::Progress;  // primal feasible already

  Vec er = Vec::Zero(m_);
  er(leave_pos) = 1.0;
  btran(er);

  // Dual ratio test over nonbasic columns.
  int enter = -1;
  double best_theta = kInf;
  double best_alpha = 0.0;
  for (int j = 0; j < n_ + m_; ++j) {
    const VStat st = stat_[static_cast<size_t>(j)];
    if (st == VStat::Basic) continue;
    if (up_(j) - lo_(j) <= 0.0 && st != VStat::Free) continue;
    const double alpha = column_value(j, er);
    if (std::abs(alpha) < kPivotTol) continue;
    bool eligible = false;
    if (below)
      eligible = (st == VStat::AtLower && alpha < 0.0) || (st == VStat::AtUpper && alpha > 0.0) ||
                 st == VStat::Free;
    else
      eligible = (st == VStat::AtLower && alpha > 0.0) || (st == VStat::AtUpper && alpha < 0.0) ||
                 st == VStat::Free;
    if (!eligible) continue;
    const double dj = cost_(j) - column_value(j, y);
    const double theta = std::max(below ? dj / (-alpha) : dj / alpha, 0.0);
    if (theta < best_theta - 1e-12 ||
        (theta <= best_theta + 1e-12 && std::abs(alpha) > std::abs(best_alpha))) {
      best_theta = theta;
      best_alpha = alpha;
      enter = j;
    }
  }
  if (enter < 0) return DualStep::GiveUp;  // let the primal certify infeasibility

  Vec w = Vec::Zero(m_);
  column_times(enter, w);
  if (std::abs(w(leave_pos)) < 1e-7) {
    // Too small to pivot on safely; re-price on a fresh factorization and let
    // the primal take over if it stays degenerate.
    if (!etas_.empty()) {
      if (!refactorize()) install_slack_basis();
      compute_basics();
      return DualStep::Progress;
    }
    return DualStep::GiveUp;
  }

  const int leave_col = basic_[static_cast<size_t>(leave_pos)];
  const double target = below ? lo_(leave_col) : up_(leave_col);
  const double delta = (x_(leave_col) - target) / w(leave_pos);
  x_(enter) += delta;
  for (int i = 0; i < m_; ++i) {
    if (w(i) == 0.0 || i == leave_pos) continue;
    x_(basic_[static_cast<size_t>(i)]) -= delta * w(i);
  }
  etas_.push_back({leave_pos, w});
  basic_[static_cast<size_t>(leave_pos)] = enter;
  stat_[static_cast<size_t>(enter)] = VStat::Basic;
  stat_[static_cast<size_t>(leave_col)] = below ? VStat::AtLower : VStat::AtUpper;
  x_(leave_col) = target;
  if (etas_.size() >= kRefactorEvery) {
    if (!refactorize()) install_slack_basis();
    compute_basics();
  }
  return DualStep::Progress;
}

LpResult SimplexSolver::solve(long iteration_limit) {
  LpResult res;
  if (!factor_ok_ && !refactorize()) {
    install_slack_basis();
    if (!factor_ok_) {
      res.status = LpStatus::Numerical;
      return res;
    }
  }
  compute_basics();

  long stall = 0;
  double last_merit = kInf;
  Vec y(m_), w(m_);
  long dual_budget = 20000;  // accelerator only; the primal path owns correctness
  long dual_stall = 0;
  double dual_best_infeas = kInf;

  for (long iter = 1; iter <= iteration_limit; ++iter) {
    res.iterations = iter;

    if (dual_budget > 0) {
      const double infeas = total_infeasibility();
      if (infeas > kFeasTol) {
        if (infeas < dual_best_infeas - 1e-12) {
          dual_best_infeas = infeas;
          dual_stall = 0;
        } else if (++dual_stall > 300) {
          dual_budget = 0;  // no progress; hand over to the primal composite
        }
      }
      if (dual_budget > 0 && infeas > kFeasTol) {
        switch (dual_step(dual_budget)) {
          case DualStep::Progress:
            continue;
          case DualStep::GiveUp:
            dual_budget = 0;
            break;  // fall through to the primal composite
          case DualStep::Numerical:
            res.status = LpStatus::Numerical;
            return res;
        }
      }
    }

    const bool phase1 = total_infeasibility() > kFeasTol;

    // Basic-cost vector for the current phase.
    Vec cb(m_);
    for (int i = 0; i < m_; ++i) {
      const int col = basic_[static_cast<size_t>(i)];
      if (phase1) {
        if (x_(col) < lo_(col) - kFeasTol)
          cb(i) = -1.0;
        else if (x_(col) > up_(col) + kFeasTol)
          cb(i) = 1.0;
        else
          cb(i) = 0.0;
      } else {
        cb(i) = cost_(col);
      }
    }
    y = cb;
    btran(y);

    // Price nonbasic columns.
    const bool bland = stall > kStallLimit;
    int enter = -1;
    int direction = 0;
    double best_score = kCostTol;
    for (int j = 0; j < n_ + m_; ++j) {
      const VStat st = stat_[static_cast<size_t>(j)];
      if (st == VStat::Basic) continue;
      if (up_(j) - lo_(j) <= 0.0 && st != VStat::Free) continue;  // fixed
      const double cj = phase1 ? 0.0 : cost_(j);
      const double rj = cj - column_value(j, y);
      int dir = 0;
      if ((st == VStat::AtLower || st == VStat::Free) && rj < -kCostTol) dir = 1;
      else if ((st == VStat::AtUpper || st == VStat::Free) && rj > kCostTol) dir = -1;
      if (dir == 0) continue;
      if (bland) {
        enter = j;
        direction = dir;
        break;
      }
      if (std::abs(rj) > best_score) {
        best_score = std::abs(rj);
        enter = j;
        direction = dir;
      }
    }

    if (enter < 0) {
      // Never certify off a stale update chain: conclusions are only trusted
      // when priced against a fresh factorization.
      if (!etas_.empty()) {
        if (!refactorize()) install_slack_basis();
        compute_basics();
        continue;
      }
      if (phase1) {
        res.status = LpStatus::Infeasible;
        return res;
      }
      res.status = LpStatus::Optimal;
      res.x = x_.head(n_);
      res.objective = cost_.head(n_).dot(res.x);
      return res;
    }

    column_times(enter, w);

    // Ratio test: first blocking event along the entering direction. Ties
    // prefer the largest pivot magnitude (lowest index under Bland's rule).
    double t_own = kInf;
    if (direction > 0 && std::isfinite(up_(enter))) t_own = up_(enter) - x_(enter);
    if (direction < 0 && std::isfinite(lo_(enter))) t_own = x_(enter) - lo_(enter);

    double t_block = t_own;
    int leave_pos = -1;
    double leave_to = 0.0;  // bound value the leaving variable lands on
    bool leave_at_upper = false;
    double best_pivot = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (std::abs(w(i)) < kPivotTol) continue;
      const int col = basic_[static_cast<size_t>(i)];
      const double rate = -direction * w(i);  // d x_basic / d t
      const double v = x_(col);
      double room = kInf;
      bool to_upper = false;
      if (v < lo_(col) - kFeasTol) {
        // Infeasible below: blocks only when rising back to its lower bound.
        if (rate > 0.0) room = (lo_(col) - v) / rate;
      } else if (v > up_(col) + kFeasTol) {
        if (rate < 0.0) {
          room = (v - up_(col)) / (-rate);
          to_upper = true;
        }
      } else if (rate > 0.0) {
        if (std::isfinite(up_(col))) {
          room = (up_(col) - v) / rate;
          to_upper = true;
        }
      } else {
        if (std::isfinite(lo_(col))) room = (v - lo_(col)) / (-rate);
      }
      if (!std::isfinite(room)) continue;
      room = std::max(room, 0.0);
      const bool better =
          room < t_block - 1e-10 ||
          (room <= t_block + 1e-10 &&
           (bland ? (leave_pos < 0 || col < basic_[static_cast<size_t>(leave_pos)])
                  : std::abs(w(i)) > best_pivot));
      if (better) {
        t_block = std::min(room, t_block);
        leave_pos = i;
        leave_at_upper = to_upper;
        leave_to = to_upper ? up_(col) : lo_(col);
        best_pivot = std::abs(w(i));
      }
    }

    if (!std::isfinite(t_block)) {
      if (!etas_.empty()) {
        if (!refactorize()) install_slack_basis();
        compute_basics();
        continue;
      }
      if (phase1) {
        res.status = LpStatus::Numerical;  // infeasibility cannot be unbounded
        return res;
      }
      res.status = LpStatus::Unbounded;
      res.x = x_.head(n_);
      return res;
    }
    t_block = std::max(t_block, 0.0);

    // Merit tracking for the anti-cycling fallback.
    const double merit = phase1 ? total_infeasibility() : cost_.head(n_).dot(x_.head(n_));
    if (merit < last_merit - 1e-12) {
      stall = 0;
      last_merit = merit;
    } else {
      ++stall;
    }

    // Move the entering variable and all basics.
    if (t_block > 0.0) {
      x_(enter) += direction * t_block;
      for (int i = 0; i < m_; ++i) {
        if (w(i) == 0.0) continue;
        const int col = basic_[static_cast<size_t>(i)];
        x_(col) -= direction * w(i) * t_block;
      }
    }

    if (leave_pos < 0) {
      // Bound-to-bound flip, no basis change.
      stat_[static_cast<size_t>(enter)] =
          direction > 0 ? VStat::AtUpper : VStat::AtLower;
      x_(enter) = direction > 0 ? up_(enter) : lo_(enter);
      continue;
    }

    const int leave_col = basic_[static_cast<size_t>(leave_pos)];
    // Pivot: push a product-form update, swap statuses. Small pivots are only
    // accepted against a freshly factorized basis.
    const double pivot = w(leave_pos);
    if (std::abs(pivot) < (etas_.empty() ? kPivotTol : 1e-7)) {
      if (!etas_.empty()) {
        if (!refactorize()) install_slack_basis();
        compute_basics();
        continue;
      }
      if (!refactorize()) install_slack_basis();
      compute_basics();
      continue;
    }
    etas_.push_back({leave_pos, w});
    basic_[static_cast<size_t>(leave_pos)] = enter;
    stat_[static_cast<size_t>(enter)] = VStat::Basic;
    stat_[static_cast<size_t>(leave_col)] = leave_at_upper ? VStat::AtUpper : VStat::AtLower;
    x_(leave_col) = leave_to;

    if (etas_.size() >= kRefactorEvery) {
      if (!refactorize()) install_slack_basis();
      compute_basics();
    }
  }
  res.status = LpStatus::IterationLimit;
  res.x = x_.head(n_);
  res.objective = cost_.head(n_).dot(res.x);
  return res;
}

LpResult simplex_solve(const LinearProgram& lp, long iteration_limit) {
  SimplexSolver solver(lp);
  return solver.solve(iteration_limit);
}

}  // namespace polyflow::opt
