#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace obsbound {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using MatrixXd = Eigen::MatrixXd;
using VectorXcd = Eigen::VectorXcd;
using VectorXd = Eigen::VectorXd;

/// Central tolerance record. Every module reads its thresholds from here so
/// test calibration has a single knob.
struct NumericPolicy {
  double hermiticity = 1e-12;    // max |M - M^dag| elementwise
  double orthonormality = 1e-10; // |V^dag V - I| elementwise
  double norm = 1e-10;           // state norm deviation
  double psd = 1e-10;            // allowed negative eigenvalue magnitude
  double prob_sum = 1e-8;        // |sum p - 1|
  double feasibility = 1e-8;     // bound-box feasibility slack
  double povm_prune = 1e-12;     // POVM eigenvalues below this count as zero
  double embed_drop = 1e-8;      // sector-projected basis vectors below this norm are dropped
};

inline const NumericPolicy& default_policy() {
  static const NumericPolicy policy{};
  return policy;
}

/// Thrown when input data violates a structural precondition (non-Hermitian
/// matrix, unnormalized state, incompatible dimensions, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when derived bound data is numerically inconsistent (e.g. the
/// probability box admits no distribution).
class InfeasibleData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double max_abs(const MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

inline void require(bool cond, const std::string& message) {
  if (!cond) throw InvalidInput(message);
}

}  // namespace obsbound
