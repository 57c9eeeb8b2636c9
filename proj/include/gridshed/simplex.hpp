#pragma once

#include <vector>

namespace gridshed {

enum class RowType { LE, GE, EQ };

struct LpRow {
  std::vector<double> coeffs;  // length n_vars
  RowType type = RowType::LE;
  double rhs = 0.0;
};

// maximize objective . x  subject to rows, x >= 0.
struct LpProblem {
  int n_vars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

// Dense two-phase tableau simplex. Dantzig entering rule with a switch to
// Bland's rule after an iteration threshold to rule out cycling.
// Feasibility/optimality tolerance 1e-7, pivot tolerance 1e-9.
LpSolution solve_lp(const LpProblem& p);

}  // namespace gridshed
