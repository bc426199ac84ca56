#pragma once

#include <variant>
#include <vector>

#include "obsbound/numeric.hpp"

namespace obsbound {

/// Dense Hermitian operator. Construction validates hermiticity against the
/// policy and reports the worst asymmetry on failure.
struct HermitianOperator {
  MatrixXcd entries;

  int dim() const { return static_cast<int>(entries.rows()); }

  static HermitianOperator from(MatrixXcd m,
                                const NumericPolicy& policy = default_policy());
};

/// Eigendecomposition of a Hermitian operator: `values` ascending, column l
/// of `vectors` is the eigenvector for values[l].
struct Spectrum {
  VectorXd values;
  MatrixXcd vectors;

  int dim() const { return static_cast<int>(values.size()); }
  double ground_energy() const { return values(0); }
  double top_energy() const { return values(dim() - 1); }
  double range() const { return top_energy() - ground_energy(); }
};

struct StateVector {
  VectorXcd amplitudes;

  int dim() const { return static_cast<int>(amplitudes.size()); }

  static StateVector from(VectorXcd amps,
                          const NumericPolicy& policy = default_policy());
  /// Normalizes and constructs; rejects the zero vector.
  static StateVector normalized(VectorXcd amps);
};

struct DensityMatrix {
  MatrixXcd entries;

  int dim() const { return static_cast<int>(entries.rows()); }

  /// Validates hermiticity and unit trace. Positivity is an O(N^3) check
  /// kept out of the hot path; call is_positive() where it matters.
  static DensityMatrix from(MatrixXcd m,
                            const NumericPolicy& policy = default_policy());
  static DensityMatrix pure(const StateVector& psi);

  bool is_positive(const NumericPolicy& policy = default_policy()) const;
};

using QuantumState = std::variant<StateVector, DensityMatrix>;

/// Dense Hermitian eigendecomposition, eigenvalues ascending. Degenerate
/// eigenvalues keep the solver's output order.
Spectrum eig_hermitian(const HermitianOperator& op,
                       const NumericPolicy& policy = default_policy());

/// Exact unitary evolution exp(-i H t) |psi> through the eigendecomposition.
/// t = 0 returns the input unchanged.
StateVector evolve(const StateVector& state, const Spectrum& spec, double t);

/// Partial trace over everything outside a contiguous block of sites.
/// `site_dims` are the local dimensions in chain order; `keep_first` /
/// `keep_count` select the contiguous block of kept sites.
DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& site_dims, int keep_first,
                            int keep_count);

/// Partial trace of a (not necessarily normalized) Hermitian operator over
/// the complement of a contiguous site block; used for reduced observables.
MatrixXcd partial_trace_operator(const MatrixXcd& op,
                                 const std::vector<int>& site_dims,
                                 int keep_first, int keep_count);

}  // namespace obsbound
