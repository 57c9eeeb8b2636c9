#include "gridshed/simplex.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace gridshed {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kPivotTol = 1e-9;

struct Tableau {
  int m = 0;       // rows
  int width = 0;   // columns incl. rhs
  std::vector<double> cells;
  std::vector<int> basis;       // basic column per row
  std::vector<double> zc;       // reduced costs z_j - c_j, length width-1
  std::vector<char> blocked;    // columns barred from entering

  double* row(int i) { return cells.data() + static_cast<std::size_t>(i) * width; }
  const double* row(int i) const { return cells.data() + static_cast<std::size_t>(i) * width; }
  int rhs_col() const { return width - 1; }

  void pivot(int pr, int pc) {
    double* prow = row(pr);
    const double inv = 1.0 / prow[pc];
    for (int j = 0; j < width; ++j) prow[j] *= inv;
    prow[pc] = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      double* r = row(i);
      const double f = r[pc];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) r[j] -= f * prow[j];
      r[pc] = 0.0;
    }
    const double fz = zc[pc];
    if (fz != 0.0) {
      for (int j = 0; j < width - 1; ++j) zc[j] -= fz * prow[j];
      zc[pc] = 0.0;
    }
    basis[pr] = pc;
  }

  // zc_j = sum_i cost[basis[i]] * T[i][j] - cost[j]
  void reset_costs(const std::vector<double>& cost) {
    const int n = width - 1;
    for (int j = 0; j < n; ++j) zc[j] = -cost[j];
    for (int i = 0; i < m; ++i) {
      const double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      const double* r = row(i);
      for (int j = 0; j < n; ++j) zc[j] += cb * r[j];
    }
  }

  // Returns false on unbounded. Maximization: enter while some zc_j < -tol.
  bool iterate() {
    const int n = width - 1;
    const long bland_after = 5L * (m + n);
    const long max_iters = 50L * (m + n) + 2000;
    for (long iter = 0;; ++iter) {
      if (iter > max_iters) throw std::runtime_error("simplex: iteration limit exceeded");
      int enter = -1;
      if (iter < bland_after) {
        double best = -kFeasTol;
        for (int j = 0; j < n; ++j) {
          if (blocked[j]) continue;
          if (zc[j] < best) {
            best = zc[j];
            enter = j;
          }
        }
      } else {
        for (int j = 0; j < n; ++j) {
          if (!blocked[j] && zc[j] < -kFeasTol) {
            enter = j;
            break;
          }
        }
      }
      if (enter < 0) return true;  // optimal

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      const int rc = rhs_col();
      for (int i = 0; i < m; ++i) {
        const double a = row(i)[enter];
        if (a <= kPivotTol) continue;
        const double b = row(i)[rc] < 0.0 ? 0.0 : row(i)[rc];
        const double ratio = b / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LpProblem& p) {
  const int n = p.n_vars;
  if (static_cast<int>(p.objective.size()) != n)
    throw std::invalid_argument("solve_lp: objective size mismatch");
  for (const LpRow& r : p.rows)
    if (static_cast<int>(r.coeffs.size()) != n)
      throw std::invalid_argument("solve_lp: row size mismatch");

  const int m = static_cast<int>(p.rows.size());

  // Normalized rows: rhs >= 0.
  std::vector<RowType> type(m);
  std::vector<double> sign(m, 1.0);
  int n_slack = 0, n_art = 0;
  for (int i = 0; i < m; ++i) {
    type[i] = p.rows[i].type;
    if (p.rows[i].rhs < 0.0) {
      sign[i] = -1.0;
      if (type[i] == RowType::LE) type[i] = RowType::GE;
      else if (type[i] == RowType::GE) type[i] = RowType::LE;
    }
    if (type[i] != RowType::EQ) ++n_slack;
    if (type[i] != RowType::LE) ++n_art;
  }

  Tableau t;
  t.m = m;
  t.width = n + n_slack + n_art + 1;
  t.cells.assign(static_cast<std::size_t>(m) * t.width, 0.0);
  t.basis.assign(m, -1);
  t.zc.assign(t.width - 1, 0.0);
  t.blocked.assign(t.width - 1, 0);

  const int slack0 = n;
  const int art0 = n + n_slack;
  int si = 0, ai = 0;
  for (int i = 0; i < m; ++i) {
    double* r = t.row(i);
    for (int j = 0; j < n; ++j) r[j] = sign[i] * p.rows[i].coeffs[j];
    r[t.rhs_col()] = sign[i] * p.rows[i].rhs;
    if (type[i] == RowType::LE) {
      r[slack0 + si] = 1.0;
      t.basis[i] = slack0 + si;
      ++si;
    } else if (type[i] == RowType::GE) {
      r[slack0 + si] = -1.0;
      ++si;
      r[art0 + ai] = 1.0;
      t.basis[i] = art0 + ai;
      ++ai;
    } else {
      r[art0 + ai] = 1.0;
      t.basis[i] = art0 + ai;
      ++ai;
    }
  }

  LpSolution sol;

  if (n_art > 0) {
    std::vector<double> cost1(t.width - 1, 0.0);
    for (int j = art0; j < art0 + n_art; ++j) cost1[j] = -1.0;
    t.reset_costs(cost1);
    t.iterate();  // bounded: objective <= 0

    double art_level = 0.0;
    for (int i = 0; i < m; ++i)
      if (t.basis[i] >= art0) art_level += std::max(0.0, t.row(i)[t.rhs_col()]);
    if (art_level > kFeasTol) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }

    for (int j = art0; j < art0 + n_art; ++j) t.blocked[j] = 1;

    // Swap any artificial still basic (at zero level) for a real column.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < art0) continue;
      const double* r = t.row(i);
      int pc = -1;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(r[j]) > kPivotTol) {
          pc = j;
          break;
        }
      }
      if (pc >= 0) t.pivot(i, pc);
      // else: row is redundant; the artificial stays pinned at zero.
    }
  }

  std::vector<double> cost2(t.width - 1, 0.0);
  for (int j = 0; j < n; ++j) cost2[j] = p.objective[j];
  t.reset_costs(cost2);
  if (!t.iterate()) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < n) sol.x[t.basis[i]] = std::max(0.0, t.row(i)[t.rhs_col()]);
  sol.objective = 0.0;
  for (int j = 0; j < n; ++j) sol.objective += p.objective[j] * sol.x[j];
  return sol;
}

}  // namespace gridshed
