#include "obsbound/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "obsbound/rng.hpp"
#include "obsbound/simplex_lp.hpp"
#include "obsbound/slp.hpp"

namespace obsbound {

void FeasibleSet::validate(const NumericPolicy& policy) const {
  const int n = dim();
  require(box.upper.size() == n, "box bound sizes disagree");
  for (int l = 0; l < n; ++l) {
    require(box.lower(l) >= -policy.feasibility &&
                box.upper(l) <= 1.0 + policy.feasibility &&
                box.lower(l) <= box.upper(l) + policy.feasibility,
            "box bounds out of order");
  }
  const double lo_sum = box.lower.sum();
  const double hi_sum = box.upper.sum();
  if (lo_sum > 1.0 + policy.feasibility || hi_sum < 1.0 - policy.feasibility) {
    std::ostringstream os;
    os << "infeasible box: sum of lower bounds " << lo_sum
       << ", sum of upper bounds " << hi_sum;
    throw InfeasibleData(os.str());
  }
  for (const QuadraticConstraint& qc : quads) {
    require(qc.below.rows() == n && qc.above.rows() == n,
            "quadratic constraint dimension mismatch");
    require(qc.outcome_min <= qc.outcome_max + policy.feasibility,
            "quadratic constraint has outcome_min > outcome_max");
  }
}

VectorXd project_box_simplex(const VectorXd& p, const VectorXd& floor,
                             const VectorXd& ceil) {
  const int n = static_cast<int>(p.size());
  auto shifted_sum = [&](double shift) {
    double s = 0.0;
    for (int l = 0; l < n; ++l)
      s += std::min(ceil(l), std::max(floor(l), p(l) + shift));
    return s;
  };
  double lo = (floor - p).minCoeff() - 1.0;
  double hi = (ceil - p).maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shifted_sum(mid) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  VectorXd out(n);
  const double shift = 0.5 * (lo + hi);
  for (int l = 0; l < n; ++l)
    out(l) = std::min(ceil(l), std::max(floor(l), p(l) + shift));
  return out;
}

namespace {

double moment_value(double e, int moment) {
  return moment == 1 ? e : std::pow(e, moment);
}

VectorXd moment_values(const VectorXd& values, int moment) {
  VectorXd v(values.size());
  for (int l = 0; l < values.size(); ++l) v(l) = moment_value(values(l), moment);
  return v;
}

/// Largest quadratic-constraint violation of a probability vector.
double quad_violation(const std::vector<QuadraticConstraint>& quads,
                      const VectorXd& p) {
  double worst = 0.0;
  const VectorXd q = p.cwiseMax(0.0).cwiseSqrt();
  for (const QuadraticConstraint& qc : quads) {
    worst = std::max(worst, q.dot(qc.below * q) - qc.outcome_min);
    worst = std::max(worst, qc.outcome_max - q.dot(qc.above * q));
  }
  return worst;
}

/// Deterministic pairwise mass transfers in probability space: move weight
/// from high-v to low-v entries (for minimization) while staying inside the
/// box and keeping every quadratic violation below `tol`. Complements the
/// gradient-based phase, whose square-root parametrization has vanishing
/// gradients on the p = 0 boundary.
VectorXd polish_transfers(VectorXd p, const VectorXd& v,
                          const FeasibleSet& set, double tol) {
  const int n = static_cast<int>(p.size());
  std::vector<int> order(n);
  for (int l = 0; l < n; ++l) order[l] = l;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return v(a) < v(b); });
  for (int pass = 0; pass < 40; ++pass) {
    bool improved = false;
    for (int ri = 0; ri < n; ++ri) {
      const int receiver = order[ri];
      for (int di = n - 1; di > ri; --di) {
        const int donor = order[di];
        if (v(donor) <= v(receiver)) continue;
        double room = std::min(set.box.upper(receiver) - p(receiver),
                               p(donor) - set.box.lower(donor));
        if (room <= 1e-13) continue;
        double step = room;
        bool applied = false;
        for (int half = 0; half < 40 && step > 1e-13; ++half) {
          VectorXd trial = p;
          trial(receiver) += step;
          trial(donor) -= step;
          if (quad_violation(set.quads, trial) <= tol) {
            p = std::move(trial);
            improved = true;
            applied = true;
            break;
          }
          step *= 0.5;
        }
        (void)applied;
      }
    }
    if (!improved) break;
  }
  return p;
}

struct DirectionOutcome {
  bool found = false;
  double objective = 0.0;
  double residual = 0.0;
  int iterations = 0;
  int accepted = 0;
};

/// Minimizes v . p over the feasible set (negate v for maximization).
DirectionOutcome optimize_direction(const FeasibleSet& set, const VectorXd& v,
                                    const VectorXd& warm_start_p,
                                    const OptimizerSettings& settings,
                                    std::uint64_t stream) {
  const int n = static_cast<int>(v.size());
  AmplitudeProgram prog;
  prog.objective = v;
  prog.floor_sq = set.box.lower.cwiseMax(0.0);
  prog.ceil_sq = set.box.upper.cwiseMin(1.0);
  prog.quads = &set.quads;

  SlpSettings slp;
  slp.constraint_tol = settings.constraint_tolerance;
  slp.objective_tol = settings.objective_tolerance;
  slp.max_iterations = settings.max_iterations;

  // Start list: the analytic extremum, an interior blend of it, then random
  // box-projected simplex samples.
  std::vector<VectorXd> starts;
  starts.push_back(warm_start_p);
  const VectorXd mid = project_box_simplex(
      0.5 * (prog.floor_sq + prog.ceil_sq), prog.floor_sq, prog.ceil_sq);
  starts.push_back(project_box_simplex(0.9 * warm_start_p + 0.1 * mid,
                                       prog.floor_sq, prog.ceil_sq));
  Rng rng(stream);
  for (int r = 0; r < settings.restarts; ++r) {
    VectorXd sample(n);
    for (int l = 0; l < n; ++l) sample(l) = -std::log1p(-rng.uniform01());
    sample /= sample.sum();
    starts.push_back(project_box_simplex(sample, prog.floor_sq, prog.ceil_sq));
  }

  // Restarts are pure given their start point; run them in parallel and
  // reduce sequentially (earliest start wins ties) so the result does not
  // depend on the schedule.
  std::vector<SlpResult> runs(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long s = 0; s < static_cast<long>(starts.size()); ++s) {
    runs[s] = slp_minimize(prog, starts[s].cwiseSqrt(), slp);
  }
  DirectionOutcome out;
  SlpResult best;
  for (const SlpResult& r : runs) {
    out.iterations += r.iterations;
    if (!r.feasible) continue;
    ++out.accepted;
    if (!out.found || r.objective < best.objective) {
      best = r;
      out.found = true;
    }
  }
  if (!out.found) return out;

  // Transfer polish on the best point, in probability space. The polish
  // keeps the quadratic violation at the level the gradient phase reached
  // instead of drifting through the full tolerance shell.
  VectorXd p = best.q.cwiseProduct(best.q);
  const double sum = p.sum();
  if (sum > 0.0) p /= sum;
  const double polish_tol =
      std::max(quad_violation(set.quads, p), 1e-10);
  p = polish_transfers(std::move(p), v, set, polish_tol);
  const double polished = v.dot(p);
  if (polished < best.objective) {
    double residual = std::max(quad_violation(set.quads, p),
                               std::abs(p.sum() - 1.0));
    for (int l = 0; l < n; ++l) {
      residual = std::max(residual, prog.floor_sq(l) - p(l));
      residual = std::max(residual, p(l) - prog.ceil_sq(l));
    }
    if (residual <= settings.constraint_tolerance) {
      best.objective = polished;
      best.max_violation = residual;
    }
  }
  out.objective = best.objective;
  out.residual = best.max_violation;
  return out;
}

}  // namespace

EstimateResult constrained_interval(const FeasibleSet& set,
                                    const VectorXd& values, int moment,
                                    const OptimizerSettings& settings,
                                    const NumericPolicy& policy) {
  set.validate(policy);
  require(values.size() == set.dim(), "eigenvalue vector dimension mismatch");
  EstimateResult result;
  VectorXd arg_lower, arg_upper;
  result.analytic = analytic_interval(set.box, values, moment, &arg_lower,
                                      &arg_upper, policy);
  if (!settings.include_quadratic || set.quads.empty()) {
    result.tight = result.analytic;
    return result;
  }

  const VectorXd v = moment_values(values, moment);
  const DirectionOutcome lo = optimize_direction(
      set, v, arg_lower, settings, settings.seed * 2654435761ULL + 1);
  const DirectionOutcome hi = optimize_direction(
      set, -v, arg_upper, settings, settings.seed * 2654435761ULL + 2);

  result.diagnostics.total_iterations = lo.iterations + hi.iterations;
  result.diagnostics.accepted_runs = lo.accepted + hi.accepted;
  result.diagnostics.worst_residual =
      std::max(lo.found ? lo.residual : 0.0, hi.found ? hi.residual : 0.0);

  double tight_lo = lo.found ? lo.objective : result.analytic.lower;
  double tight_hi = hi.found ? -hi.objective : result.analytic.upper;
  if (!lo.found || !hi.found) result.diagnostics.degraded = true;

  // The tight interval is nested in the analytic one by construction; any
  // numerical drift outside is clamped and flagged.
  const double clamped_lo =
      std::min(std::max(tight_lo, result.analytic.lower),
               result.analytic.upper);
  const double clamped_hi =
      std::max(std::min(tight_hi, result.analytic.upper),
               result.analytic.lower);
  if (clamped_lo != tight_lo || clamped_hi != tight_hi) {
    result.diagnostics.clamped = true;
  }
  tight_lo = clamped_lo;
  tight_hi = clamped_hi;
  if (tight_lo > tight_hi) {  // optimizer noise on a width-zero interval
    const double mid = 0.5 * (tight_lo + tight_hi);
    tight_lo = tight_hi = mid;
    result.diagnostics.clamped = true;
  }
  result.tight = Interval{tight_lo, tight_hi};
  return result;
}

Interval lp_oracle(const ProbabilityBounds& box, const VectorXd& values,
                   int moment, const NumericPolicy& policy) {
  const int n = static_cast<int>(values.size());
  require(box.lower.size() == n && box.upper.size() == n,
          "box dimension mismatch");
  const double lo_sum = box.lower.sum();
  const double hi_sum = box.upper.sum();
  if (lo_sum > 1.0 + policy.feasibility || hi_sum < 1.0 - policy.feasibility) {
    std::ostringstream os;
    os << "infeasible box: sum of lower bounds " << lo_sum
       << ", sum of upper bounds " << hi_sum;
    throw InfeasibleData(os.str());
  }
  const VectorXd v = moment_values(values, moment);

  // Shift x = p - lower, 0 <= x <= upper - lower, sum x = 1 - sum lower
  // (written as a pair of inequalities for the elastic solver).
  MatrixXd rows(2, n);
  rows.row(0).setOnes();
  rows.row(1) = -rows.row(0);
  const double budget = 1.0 - lo_sum;
  VectorXd rhs(2);
  rhs << budget, -budget;
  const VectorXd span = (box.upper - box.lower).cwiseMax(0.0);
  const double big = 1e9 * (1.0 + v.cwiseAbs().maxCoeff());
  const VectorXd elastic = VectorXd::Constant(2, big);

  Interval out;
  const LpSolution lo = solve_elastic_lp(rows, rhs, v, span, elastic);
  require(lo.elastic_total < 1e-7, "linear program reported infeasible box");
  out.lower = v.dot(box.lower) + lo.objective;
  const LpSolution hi = solve_elastic_lp(rows, rhs, -v, span, elastic);
  require(hi.elastic_total < 1e-7, "linear program reported infeasible box");
  out.upper = v.dot(box.lower) - hi.objective;
  return out;
}

}  // namespace obsbound
