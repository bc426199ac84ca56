#pragma once

#include <string>
#include <variant>
#include <vector>

#include "obsbound/models.hpp"
#include "obsbound/spectral.hpp"

namespace obsbound {

/// Complete projective measurement: row i of `bras` is the bra of outcome i.
struct ProjectiveBasis {
  MatrixXcd bras;
  std::vector<std::string> labels;

  int dim() const { return static_cast<int>(bras.rows()); }
  int outcomes() const { return dim(); }

  static ProjectiveBasis from(MatrixXcd rows, std::vector<std::string> labels,
                              const NumericPolicy& policy = default_policy());
};

/// One POVM element with its spectral data; eigenvalues below the pruning
/// tolerance are discarded so extrema over k run only over positive gammas.
struct PovmElement {
  MatrixXcd matrix;   // Pi_i in the source basis
  MatrixXcd vectors;  // columns |i^k> with gamma_i^k > 0
  VectorXd gammas;    // matching eigenvalues, in (0, 1]
  double volume = 0;  // tr Pi_i
};

struct Povm {
  std::vector<PovmElement> elements;
  std::vector<std::string> labels;
  int dimension = 0;

  int dim() const { return dimension; }
  int outcomes() const { return static_cast<int>(elements.size()); }

  /// Builds from explicit PSD matrices; checks positivity and completeness,
  /// then eigendecomposes each element.
  static Povm from_matrices(std::vector<MatrixXcd> matrices,
                            std::vector<std::string> labels = {},
                            const NumericPolicy& policy = default_policy());
};

using Measurement = std::variant<ProjectiveBasis, Povm>;

int measurement_dim(const Measurement& m);
int measurement_outcomes(const Measurement& m);

/// A measurement with the times (within [0, T]) at which it is performed.
struct TimedMeasurement {
  Measurement measurement;
  std::vector<double> times;
};

struct MeasurementSet {
  std::vector<TimedMeasurement> items;
};

/// Identity basis labeled by the sector's computational bitstrings.
ProjectiveBasis computational_basis(const SymmetrySector& sector);

/// Embeds a sector vector into the full 2^L space.
VectorXcd embed_in_full(const VectorXcd& sector_vec,
                        const SymmetrySector& sector);

/// Restricts a full-space basis to a sector: each bra is projected onto the
/// sector coordinates, near-zero projections are dropped, the rest is
/// orthonormalized in source order, and the basis is completed inside the
/// sector if rank deficient.
ProjectiveBasis project_to_sector(const ProjectiveBasis& full_basis,
                                  const SymmetrySector& sector,
                                  const NumericPolicy& policy =
                                      default_policy());

/// Per-block eigenbases of the reduced density matrices of `full_state`
/// (local Schmidt bases), tensored over the contiguous length-`block_size`
/// blocks of a chain of `length` qubits. Eigenvectors are ordered by
/// descending eigenvalue; degenerate clusters get a deterministic
/// phase-fixed basis.
ProjectiveBasis klocal_ground_state_basis(const StateVector& full_state,
                                          int length, int block_size,
                                          const NumericPolicy& policy =
                                              default_policy());

/// Eigenbasis of the block-truncated model Hamiltonian as a tensor product
/// of per-block eigenbases, restricted to `sector`.
ProjectiveBasis klocal_observable_basis_type1(const ModelSpec& spec,
                                              const SymmetrySector& sector,
                                              int block_size);

/// Per-block eigenbases of the partial traces of a full-space observable,
/// tensored across blocks. Returned in the full space; restrict with
/// project_to_sector when working in a sector.
ProjectiveBasis klocal_observable_basis_type2(const HermitianOperator& op,
                                              int length, int block_size);

/// U = U_1 (x) ... (x) U_B from per-block bases whose rows are the local
/// bras; applying U and reading out in the computational basis reproduces
/// the local-basis measurement.
MatrixXcd measurement_unitary(const std::vector<MatrixXcd>& local_bras,
                              const NumericPolicy& policy = default_policy());

/// Projectors onto half-open energy bins [E_1 + m dE, E_1 + (m+1) dE);
/// bins containing no eigenvalues are omitted.
Povm coarse_energy_povm(const Spectrum& spec, double delta_e);

VectorXd outcome_probabilities(const StateVector& state, const Measurement& m,
                               const NumericPolicy& policy = default_policy());
VectorXd outcome_probabilities(const DensityMatrix& rho, const Measurement& m,
                               const NumericPolicy& policy = default_policy());

/// Volumes tr Pi_i of a measurement (all ones for projective bases).
VectorXd measurement_volumes(const Measurement& m);

/// -sum_i p_i ln(p_i / V_i); zero-probability outcomes contribute nothing.
double observational_entropy(const VectorXd& p, const VectorXd& volumes);

}  // namespace obsbound
