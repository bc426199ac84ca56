#pragma once

#include <vector>

#include "obsbound/bounds.hpp"
#include "obsbound/numeric.hpp"

namespace obsbound {

/// Minimize sum_l v_l q_l^2 over amplitudes q >= 0 constrained by
///   |q|^2 = 1,  floor_l <= q_l^2 <= ceil_l,
///   q^T below_i q <= outcome_min_i,  q^T above_i q >= outcome_max_i.
struct AmplitudeProgram {
  VectorXd objective;  // v
  VectorXd floor_sq;
  VectorXd ceil_sq;
  const std::vector<QuadraticConstraint>* quads = nullptr;
};

struct SlpSettings {
  double constraint_tol = 1e-6;
  double objective_tol = 1e-8;
  int max_iterations = 400;
  double initial_radius = 0.25;
  double min_radius = 1e-10;
  double initial_penalty = 10.0;
  double max_penalty = 1e10;
};

struct SlpResult {
  VectorXd q;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  bool feasible = false;
};

/// Sequential linear programming with an l1 exact-penalty merit and a box
/// trust region; each step solves an elastic LP on the analytic
/// linearizations of the quadratic constraints.
SlpResult slp_minimize(const AmplitudeProgram& prog, VectorXd q0,
                       const SlpSettings& settings);

/// Constraint violations of an amplitude vector, max over all constraints.
double amplitude_violation(const AmplitudeProgram& prog, const VectorXd& q);

}  // namespace obsbound
