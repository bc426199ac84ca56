#include "obsbound/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "obsbound/rng.hpp"

namespace obsbound {

namespace {

int bit_of(int length, int site) { return length - 1 - site; }

int spin_z(long index, int length, int site) {
  return ((index >> bit_of(length, site)) & 1L) ? -1 : +1;
}

long flipped(long index, int length, int site) {
  return index ^ (1L << bit_of(length, site));
}

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

}  // namespace

void ModelSpec::validate() const {
  require(length >= 2, "chain length must be at least 2");
  require(length <= 20, "chain length above 20 is outside the dense regime");
  require(disorder_strength >= 0.0, "disorder strength must be nonnegative");
  if (kind == ModelKind::Ising || kind == ModelKind::XY) {
    require(alpha > 0.0, "long-range exponent alpha must be positive");
  }
}

int SymmetrySector::position_of(long full_index) const {
  auto it =
      std::lower_bound(basis_indices.begin(), basis_indices.end(), full_index);
  if (it == basis_indices.end() || *it != full_index) return -1;
  return static_cast<int>(it - basis_indices.begin());
}

std::string SymmetrySector::bitstring(int position) const {
  const long index = basis_indices.at(position);
  std::string s(length, '0');
  for (int site = 0; site < length; ++site) {
    if ((index >> bit_of(length, site)) & 1L) s[site] = '1';
  }
  return s;
}

SymmetrySector sector_basis(int length, SectorKind kind, int particles) {
  require(length >= 2, "chain length must be at least 2");
  require(length <= 20, "chain length above 20 is outside the dense regime");
  SymmetrySector sector;
  sector.kind = kind;
  sector.length = length;
  sector.particles = particles;
  const long total = 1L << length;
  switch (kind) {
    case SectorKind::SpinZ:
      require(particles >= 0 && particles <= length,
              "particle count must lie in [0, L]");
      for (long b = 0; b < total; ++b) {
        if (std::popcount(static_cast<unsigned long>(b)) == particles)
          sector.basis_indices.push_back(b);
      }
      require(sector.dim() == binomial(length, particles),
              "spin-z sector dimension mismatch");
      break;
    case SectorKind::ParityEven:
      for (long b = 0; b < total; ++b) {
        if ((std::popcount(static_cast<unsigned long>(b)) & 1) == 0)
          sector.basis_indices.push_back(b);
      }
      break;
    case SectorKind::Full:
      sector.basis_indices.resize(total);
      for (long b = 0; b < total; ++b) sector.basis_indices[b] = b;
      break;
  }
  return sector;
}

std::vector<double> disorder_fields(const ModelSpec& spec) {
  Rng rng(spec.seed);
  std::vector<double> h(spec.length);
  for (int s = 0; s < spec.length; ++s) {
    h[s] = spec.disorder_strength * (2.0 * rng.uniform01() - 1.0);
  }
  return h;
}

namespace {

void check_sector_compatibility(const ModelSpec& spec,
                                const SymmetrySector& sector) {
  require(sector.length == spec.length,
          "sector and model chain lengths differ");
  const bool full = sector.kind == SectorKind::Full;
  switch (spec.kind) {
    case ModelKind::Heisenberg:
    case ModelKind::XY:
      require(full || sector.kind == SectorKind::SpinZ,
              "incompatible sector: this model conserves total spin-z; use a "
              "spin-z or full sector");
      break;
    case ModelKind::Ising:
      require(full || sector.kind == SectorKind::ParityEven,
              "incompatible sector: the Ising chain conserves only spin "
              "parity; use a parity-even or full sector");
      break;
    case ModelKind::PXP:
      require(full, "incompatible sector: the PXP chain is simulated on the "
                    "full space");
      break;
  }
}

/// Assembles the model terms on `sector` of a chain of `chain_len` sites,
/// with disorder fields h[field_offset + s] for local site s. Terms whose
/// sites fall in different length-`block` blocks are skipped (block =
/// chain_len keeps everything). Couplings in long-range models depend only
/// on site distance, so sub-chains inherit them unchanged.
MatrixXcd assemble(const ModelSpec& spec, const SymmetrySector& sector,
                   int chain_len, int block, const std::vector<double>& h,
                   int field_offset) {
  const int L = chain_len;
  const int D = sector.dim();
  MatrixXcd H = MatrixXcd::Zero(D, D);

  auto same_block = [block](int s, int t) { return s / block == t / block; };
  auto add = [&H, &sector](long target, int col, double amp) {
    const int row = sector.position_of(target);
    require(row >= 0, "model term leaves the symmetry sector");
    H(row, col) += amp;
  };

  for (int col = 0; col < D; ++col) {
    const long b = sector.basis_indices[col];
    double diag = 0.0;
    switch (spec.kind) {
      case ModelKind::Heisenberg:
        for (int s = 0; s < L; ++s)
          diag += h[field_offset + s] * spin_z(b, L, s);
        for (int s = 0; s + 1 < L; ++s) {
          if (!same_block(s, s + 1)) continue;
          const int za = spin_z(b, L, s);
          const int zb = spin_z(b, L, s + 1);
          diag += za * zb;
          if (za != zb) add(flipped(flipped(b, L, s), L, s + 1), col, 2.0);
        }
        break;
      case ModelKind::XY:
        // Field term is B sum sigma_z with B = 0; only the hopping acts.
        for (int s = 0; s < L; ++s) {
          for (int t = s + 1; t < L; ++t) {
            if (!same_block(s, t)) continue;
            if (spin_z(b, L, s) != spin_z(b, L, t)) {
              const double j = spec.j0 / std::pow(double(t - s), spec.alpha);
              add(flipped(flipped(b, L, s), L, t), col, j);
            }
          }
        }
        break;
      case ModelKind::Ising:
        for (int s = 0; s < L; ++s)
          diag += 0.5 * (spec.field + h[field_offset + s]) * spin_z(b, L, s);
        for (int s = 0; s < L; ++s) {
          for (int t = s + 1; t < L; ++t) {
            if (!same_block(s, t)) continue;
            const double j = spec.j0 / std::pow(double(t - s), spec.alpha);
            add(flipped(flipped(b, L, s), L, t), col, j);
          }
        }
        break;
      case ModelKind::PXP:
        for (int s = 0; s + 2 < L; ++s) {
          if (!same_block(s, s + 2)) continue;
          if (spin_z(b, L, s) == -1 && spin_z(b, L, s + 2) == -1) {
            add(flipped(b, L, s + 1), col, spec.omega);
          }
        }
        break;
    }
    H(col, col) += diag;
  }
  return H;
}

SymmetrySector full_sector_unchecked(int length) {
  SymmetrySector sector;
  sector.kind = SectorKind::Full;
  sector.length = length;
  sector.basis_indices.resize(1L << length);
  for (long b = 0; b < (1L << length); ++b) sector.basis_indices[b] = b;
  return sector;
}

}  // namespace

HermitianOperator build_hamiltonian(const ModelSpec& spec,
                                    const SymmetrySector& sector) {
  spec.validate();
  check_sector_compatibility(spec, sector);
  return HermitianOperator::from(assemble(spec, sector, spec.length,
                                          spec.length, disorder_fields(spec),
                                          0));
}

HermitianOperator block_truncated_hamiltonian(const ModelSpec& spec,
                                              const SymmetrySector& sector,
                                              int block_size) {
  spec.validate();
  check_sector_compatibility(spec, sector);
  if (block_size < 1 || spec.length % block_size != 0) {
    std::ostringstream os;
    os << "block size " << block_size << " does not divide chain length "
       << spec.length;
    throw InvalidInput(os.str());
  }
  return HermitianOperator::from(assemble(spec, sector, spec.length,
                                          block_size, disorder_fields(spec),
                                          0));
}

MatrixXcd block_local_hamiltonian(const ModelSpec& spec, int block_first,
                                  int block_size) {
  spec.validate();
  require(block_size >= 1, "block size must be positive");
  require(block_first >= 0 && block_first + block_size <= spec.length,
          "block out of range");
  const SymmetrySector block = full_sector_unchecked(block_size);
  return assemble(spec, block, block_size, block_size, disorder_fields(spec),
                  block_first);
}

}  // namespace obsbound
