#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obsbound/numeric.hpp"
#include "obsbound/spectral.hpp"

namespace obsbound {

enum class ModelKind { Heisenberg, Ising, XY, PXP };

/// Spin-chain model with hard-wall boundaries. Disorder fields h_i are drawn
/// uniformly from [-W, W], reproducibly from `seed` (one Rng stream, sites in
/// chain order).
struct ModelSpec {
  ModelKind kind = ModelKind::Heisenberg;
  int length = 0;                  // site count L
  double disorder_strength = 0.0;  // W >= 0
  std::uint64_t seed = 0;
  // Couplings; which ones apply depends on `kind`.
  double j0 = 1.0;     // Ising / XY long-range prefactor
  double alpha = 0.0;  // Ising / XY power-law exponent
  double field = 0.0;  // Ising transverse-field offset B (XY field is fixed 0)
  double omega = 1.0;  // PXP Rabi coupling

  void validate() const;
};

enum class SectorKind { SpinZ, ParityEven, Full };

/// Symmetry sector of the 2^L computational space: the list of computational
/// basis indices spanning it, ascending. Site s maps to bit (L-1-s), so the
/// bitstring of an index reads left to right along the chain; bit value 1 is
/// the sigma_z = -1 state.
struct SymmetrySector {
  SectorKind kind = SectorKind::Full;
  int length = 0;
  int particles = 0;  // SpinZ only: number of 1-bits
  std::vector<long> basis_indices;

  int dim() const { return static_cast<int>(basis_indices.size()); }
  /// Position of a full-space index inside the sector, or -1.
  int position_of(long full_index) const;
  std::string bitstring(int position) const;
};

SymmetrySector sector_basis(int length, SectorKind kind, int particles = 0);

/// Disorder realization for `spec` (empty when W = 0 still yields L draws,
/// all scaled by W, so the stream layout does not depend on W).
std::vector<double> disorder_fields(const ModelSpec& spec);

/// Model Hamiltonian restricted to `sector`. Rejects sector/model pairings
/// that do not respect the model's conservation law.
HermitianOperator build_hamiltonian(const ModelSpec& spec,
                                    const SymmetrySector& sector);

/// Hamiltonian with every term coupling different length-k site blocks
/// removed; k = L reproduces build_hamiltonian exactly.
HermitianOperator block_truncated_hamiltonian(const ModelSpec& spec,
                                              const SymmetrySector& sector,
                                              int block_size);

/// The terms of `spec` acting entirely inside sites
/// [block_first, block_first + block_size), as a 2^block_size operator.
/// Building all blocks and summing their embeddings reproduces
/// block_truncated_hamiltonian on the full sector.
MatrixXcd block_local_hamiltonian(const ModelSpec& spec, int block_first,
                                  int block_size);

}  // namespace obsbound
