#pragma once

#include <cstdint>
#include <vector>

#include "obsbound/bounds.hpp"
#include "obsbound/numeric.hpp"

namespace obsbound {

/// All observation-derived constraints on the energy distribution: the
/// per-eigenvalue box plus the collective quadratic sandwiches.
struct FeasibleSet {
  ProbabilityBounds box;
  std::vector<QuadraticConstraint> quads;

  int dim() const { return static_cast<int>(box.lower.size()); }
  void validate(const NumericPolicy& policy = default_policy()) const;
};

struct OptimizerSettings {
  double constraint_tolerance = 1e-6;
  double objective_tolerance = 1e-8;
  int max_iterations = 400;
  int restarts = 8;
  bool include_quadratic = true;
  std::uint64_t seed = 0;
};

struct EstimatorDiagnostics {
  int total_iterations = 0;
  int accepted_runs = 0;       // restarts that ended on a feasible point
  double worst_residual = 0.0; // constraint residual at the returned optima
  bool clamped = false;        // optimizer drifted past the analytic bound
  bool degraded = false;       // no feasible point found; analytic returned
};

struct EstimateResult {
  Interval tight;
  Interval analytic;
  EstimatorDiagnostics diagnostics;
};

/// Tight interval for the moment-k expectation over the feasible set:
/// multistart trust-region optimization in the square-root parametrization,
/// warm-started from the analytic extremal distributions, followed by a
/// deterministic pairwise mass-transfer polish. Guaranteed to return an
/// interval nested inside the analytic one.
EstimateResult constrained_interval(const FeasibleSet& set,
                                    const VectorXd& values, int moment,
                                    const OptimizerSettings& settings,
                                    const NumericPolicy& policy =
                                        default_policy());

/// Exact optimum of the linear program min/max sum_l v_l p_l subject to the
/// box and normalization only, solved with the simplex engine. Serves as an
/// independent check of the greedy-fill interval.
Interval lp_oracle(const ProbabilityBounds& box, const VectorXd& values,
                   int moment = 1,
                   const NumericPolicy& policy = default_policy());

/// Euclidean projection of `p` onto the polytope {floor <= x <= ceil,
/// sum x = 1} by uniform-shift water filling. Exposed for reuse by tests.
VectorXd project_box_simplex(const VectorXd& p, const VectorXd& floor,
                             const VectorXd& ceil);

}  // namespace obsbound
