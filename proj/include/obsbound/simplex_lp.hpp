#pragma once

#include "obsbound/numeric.hpp"

namespace obsbound {

/// Solution of an elastic linear program.
struct LpSolution {
  VectorXd x;            // primal values of the structural variables
  double objective = 0;  // cost . x (elastic penalty not included)
  double elastic_total = 0;  // sum of elastic slack values
  int iterations = 0;
};

/// Solves
///   min  cost.x + sum_j elastic_cost_j s_j
///   s.t. rows_j . x <= rhs_j + s_j,  0 <= x <= upper,  s >= 0
/// with a dense bounded-variable primal simplex. The elastic slacks make the
/// program always feasible; a large elastic cost recovers hard constraints
/// (elastic_total reports the residual infeasibility). Deterministic pivot
/// rules (Dantzig with lowest-index ties, Bland fallback on stalls).
LpSolution solve_elastic_lp(const MatrixXd& rows, const VectorXd& rhs,
                            const VectorXd& cost, const VectorXd& upper,
                            const VectorXd& elastic_cost);

}  // namespace obsbound
