#include "obsbound/slp.hpp"

#include <algorithm>
#include <cmath>

#include "obsbound/simplex_lp.hpp"

namespace obsbound {

namespace {

/// Values and gradients of every constraint written as g(q) <= 0.
struct ConstraintEval {
  VectorXd g;       // one entry per constraint row
  MatrixXd grad;    // row j = gradient of g_j
};

int constraint_count(const AmplitudeProgram& prog) {
  const int n = static_cast<int>(prog.objective.size());
  const int nq = prog.quads ? static_cast<int>(prog.quads->size()) : 0;
  return 2 + 2 * n + 2 * nq;
}

ConstraintEval evaluate_constraints(const AmplitudeProgram& prog,
                                    const VectorXd& q) {
  const int n = static_cast<int>(q.size());
  const int rows = constraint_count(prog);
  ConstraintEval ev;
  ev.g.resize(rows);
  ev.grad.resize(rows, n);
  int r = 0;
  const double norm_sq = q.squaredNorm();
  ev.g(r) = norm_sq - 1.0;
  ev.grad.row(r) = 2.0 * q.transpose();
  ++r;
  ev.g(r) = 1.0 - norm_sq;
  ev.grad.row(r) = -2.0 * q.transpose();
  ++r;
  for (int l = 0; l < n; ++l) {
    ev.g(r) = prog.floor_sq(l) - q(l) * q(l);
    ev.grad.row(r).setZero();
    ev.grad(r, l) = -2.0 * q(l);
    ++r;
    ev.g(r) = q(l) * q(l) - prog.ceil_sq(l);
    ev.grad.row(r).setZero();
    ev.grad(r, l) = 2.0 * q(l);
    ++r;
  }
  if (prog.quads) {
    for (const QuadraticConstraint& qc : *prog.quads) {
      const VectorXd below_q = qc.below * q;
      ev.g(r) = q.dot(below_q) - qc.outcome_min;
      ev.grad.row(r) = 2.0 * below_q.transpose();
      ++r;
      const VectorXd above_q = qc.above * q;
      ev.g(r) = qc.outcome_max - q.dot(above_q);
      ev.grad.row(r) = -2.0 * above_q.transpose();
      ++r;
    }
  }
  return ev;
}

double total_violation(const VectorXd& g) {
  double s = 0.0;
  for (int j = 0; j < g.size(); ++j) s += std::max(0.0, g(j));
  return s;
}

double max_violation(const VectorXd& g) {
  double s = 0.0;
  for (int j = 0; j < g.size(); ++j) s = std::max(s, g(j));
  return s;
}

}  // namespace

double amplitude_violation(const AmplitudeProgram& prog, const VectorXd& q) {
  return max_violation(evaluate_constraints(prog, q).g);
}

SlpResult slp_minimize(const AmplitudeProgram& prog, VectorXd q,
                       const SlpSettings& settings) {
  const int n = static_cast<int>(prog.objective.size());
  require(q.size() == n, "start point dimension mismatch");
  q = q.cwiseMax(0.0);

  auto objective = [&prog](const VectorXd& x) {
    return prog.objective.dot(x.cwiseProduct(x));
  };

  double radius = settings.initial_radius;
  double penalty =
      std::max(settings.initial_penalty,
               2.0 * (1.0 + prog.objective.cwiseAbs().maxCoeff()));

  ConstraintEval ev = evaluate_constraints(prog, q);
  double f = objective(q);
  double merit = f + penalty * total_violation(ev.g);

  SlpResult best;
  best.q = q;
  best.objective = f;
  best.max_violation = max_violation(ev.g);
  best.feasible = best.max_violation < settings.constraint_tol;

  int iter = 0;
  int shrink_streak = 0;
  for (; iter < settings.max_iterations; ++iter) {
    // Trust-region LP in d = d_plus - d_minus.
    const int rows = static_cast<int>(ev.g.size());
    MatrixXd lp_rows(rows, 2 * n);
    lp_rows.leftCols(n) = ev.grad;
    lp_rows.rightCols(n) = -ev.grad;
    const VectorXd lp_rhs = -ev.g;
    VectorXd lp_cost(2 * n);
    const VectorXd grad_f = 2.0 * prog.objective.cwiseProduct(q);
    lp_cost.head(n) = grad_f;
    lp_cost.tail(n) = -grad_f;
    VectorXd lp_upper(2 * n);
    for (int l = 0; l < n; ++l) {
      lp_upper(l) = radius;
      lp_upper(n + l) = std::min(radius, q(l));  // keep q + d >= 0
    }
    const VectorXd elastic = VectorXd::Constant(rows, penalty);

    const LpSolution lp =
        solve_elastic_lp(lp_rows, lp_rhs, lp_cost, lp_upper, elastic);
    const VectorXd step = lp.x.head(n) - lp.x.tail(n);

    // Predicted merit decrease from the linear model.
    double lin_violation = 0.0;
    const VectorXd g_lin = ev.g + ev.grad * step;
    lin_violation = total_violation(g_lin);
    const double predicted = merit - (f + grad_f.dot(step) +
                                      penalty * lin_violation);

    if (predicted < settings.objective_tol * (1.0 + std::abs(f))) {
      const double mv = max_violation(ev.g);
      if (mv < settings.constraint_tol) break;  // stationary and feasible
      // Infeasible and the linear model cannot improve: push the penalty,
      // and once it saturates shrink the region before giving up.
      if (penalty < settings.max_penalty) {
        penalty *= 10.0;
        merit = f + penalty * total_violation(ev.g);
        continue;
      }
      if (radius > settings.min_radius) {
        radius = std::max(settings.min_radius, radius * 0.5);
        continue;
      }
      break;
    }

    const VectorXd trial = (q + step).cwiseMax(0.0);
    const ConstraintEval trial_ev = evaluate_constraints(prog, trial);
    const double trial_f = objective(trial);
    const double trial_merit =
        trial_f + penalty * total_violation(trial_ev.g);
    const double ratio = (merit - trial_merit) / predicted;

    // Track every feasible point seen, whether or not the merit accepts it.
    const double trial_mv = max_violation(trial_ev.g);
    if (trial_mv < settings.constraint_tol &&
        (!best.feasible || trial_f < best.objective)) {
      best.q = trial;
      best.objective = trial_f;
      best.max_violation = trial_mv;
      best.feasible = true;
    }

    if (ratio >= 0.1) {
      q = trial;
      ev = trial_ev;
      f = trial_f;
      merit = trial_merit;
      shrink_streak = 0;
      if (ratio > 0.75 && step.cwiseAbs().maxCoeff() > 0.9 * radius) {
        radius = std::min(1.0, 2.0 * radius);
      }
    } else {
      radius = std::max(settings.min_radius, radius * 0.5);
      if (++shrink_streak > 30) {
        if (penalty < settings.max_penalty) {
          penalty *= 10.0;
          merit = f + penalty * total_violation(ev.g);
          shrink_streak = 0;
        } else {
          break;
        }
      }
    }
  }

  // Prefer the best feasible point seen; otherwise report the final iterate.
  if (!best.feasible) {
    best.q = q;
    best.objective = f;
    best.max_violation = max_violation(ev.g);
  }
  best.iterations = iter;
  return best;
}

}  // namespace obsbound
