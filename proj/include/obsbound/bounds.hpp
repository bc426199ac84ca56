#pragma once

#include <optional>
#include <vector>

#include "obsbound/measurements.hpp"
#include "obsbound/spectral.hpp"

namespace obsbound {

/// Time-independent overlap data between a projective measurement and the
/// estimated observable's eigenbasis: g(i, l) = |<i|E_l>| and its square.
struct ProjectiveOverlaps {
  MatrixXd g;
  MatrixXd g_sq;
};

/// Per-element POVM overlap data in the energy eigenbasis.
struct PovmOverlaps {
  MatrixXd diag;         // (i, l) = <E_l|Pi_i|E_l>
  MatrixXd x_min;        // (i, l) = min_k gamma_i^k |<i^k|E_l>|^2
  MatrixXd y_max;        // (i, l) = max_k |<i^k|E_l>|^2
  VectorXd gamma_floor;  // per element: min_k gamma_i^k
  VectorXd volume;       // per element: tr Pi_i
};

struct OverlapData {
  std::optional<ProjectiveOverlaps> projective;
  std::optional<PovmOverlaps> povm;
};

OverlapData overlaps_for(const Measurement& m, const Spectrum& spec);

/// Per-eigenvalue lower/upper bounds (a, b) from one set of outcome
/// probabilities.
struct PointwiseBounds {
  VectorXd lower;
  VectorXd upper;
};

PointwiseBounds pointwise_bounds(const VectorXd& p,
                                 const ProjectiveOverlaps& ov);
PointwiseBounds povm_pointwise_bounds(const VectorXd& p,
                                      const PovmOverlaps& ov);
PointwiseBounds pointwise_bounds_any(const VectorXd& p, const OverlapData& ov);

struct OutcomeRange {
  double minimum = 0.0;
  double maximum = 1.0;
};

/// Extremized bounds: elementwise max of the lower envelopes and min of the
/// upper envelopes over all (measurement, time) cells, plus the per-outcome
/// probability ranges seen over each measurement's time grid.
struct ProbabilityBounds {
  VectorXd lower;
  VectorXd upper;
  std::vector<std::vector<OutcomeRange>> outcome_ranges;
};

/// Extremizes the pointwise bounds over every (measurement, time) cell.
/// Evolution uses `spec` itself, which is valid when the estimated
/// observable generates the dynamics (energy estimation). When the target is
/// not conserved pass conserved = false; every time grid must then be {0}
/// and the caller evolves the state externally before the call.
ProbabilityBounds sweep(const QuantumState& state, const Spectrum& spec,
                        const MeasurementSet& ms, bool conserved = true,
                        const NumericPolicy& policy = default_policy());

/// Serial reference implementation of sweep; bitwise-identical output.
ProbabilityBounds sweep_serial(const QuantumState& state, const Spectrum& spec,
                               const MeasurementSet& ms, bool conserved = true,
                               const NumericPolicy& policy = default_policy());

/// Collective constraint sqrt(p)^T below sqrt(p) <= p_i <= sqrt(p)^T above
/// sqrt(p) on the energy distribution, for one measurement outcome.
struct QuadraticConstraint {
  MatrixXd below;  // alternating-sign form (diagonal positive)
  MatrixXd above;  // elementwise-absolute form
  double outcome_min = 0.0;
  double outcome_max = 1.0;
  int measurement_index = -1;
  int outcome_index = -1;
};

std::vector<QuadraticConstraint> quadratic_forms(
    const Measurement& m, const Spectrum& spec,
    const std::vector<OutcomeRange>* ranges = nullptr,
    int measurement_index = -1);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

/// Exact optimum of sum_l v_l p_l over the box-plus-normalization polytope,
/// computed by the greedy fill from the spectrum ends; v_l = values_l^moment
/// and the fill order follows v (stable in the original index). Optionally
/// returns the extremizing distributions.
Interval analytic_interval(const ProbabilityBounds& pb, const VectorXd& values,
                           int moment = 1, VectorXd* arg_lower = nullptr,
                           VectorXd* arg_upper = nullptr,
                           const NumericPolicy& policy = default_policy());

struct QualityFactors {
  double range_excluded_pct = 0.0;   // share of the spectral range excluded
  double states_excluded_pct = 0.0;  // share of eigenstates excluded
};

QualityFactors quality_factors(double lower, double upper,
                               const VectorXd& values);
QualityFactors quality_factors(double lower, double upper,
                               const Spectrum& spec);

}  // namespace obsbound
