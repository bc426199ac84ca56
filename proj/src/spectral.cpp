#include "obsbound/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace obsbound {

HermitianOperator HermitianOperator::from(MatrixXcd m,
                                          const NumericPolicy& policy) {
  require(m.rows() == m.cols(), "operator matrix must be square");
  require(m.rows() > 0, "operator matrix must be nonempty");
  const double asym = max_abs(m - m.adjoint());
  if (asym > policy.hermiticity) {
    std::ostringstream os;
    os << "matrix is not Hermitian: max |M - M^dag| = " << asym
       << " exceeds tolerance " << policy.hermiticity;
    throw InvalidInput(os.str());
  }
  return HermitianOperator{std::move(m)};
}

StateVector StateVector::from(VectorXcd amps, const NumericPolicy& policy) {
  require(amps.size() > 0, "state vector must be nonempty");
  const double n = amps.norm();
  if (std::abs(n - 1.0) > policy.norm) {
    std::ostringstream os;
    os << "state vector norm " << n << " deviates from 1 beyond " << policy.norm;
    throw InvalidInput(os.str());
  }
  return StateVector{std::move(amps)};
}

StateVector StateVector::normalized(VectorXcd amps) {
  require(amps.size() > 0, "state vector must be nonempty");
  const double n = amps.norm();
  require(n > 0.0, "cannot normalize the zero vector");
  return StateVector{amps / n};
}

DensityMatrix DensityMatrix::from(MatrixXcd m, const NumericPolicy& policy) {
  require(m.rows() == m.cols() && m.rows() > 0,
          "density matrix must be square and nonempty");
  const double asym = max_abs(m - m.adjoint());
  if (asym > policy.hermiticity) {
    std::ostringstream os;
    os << "density matrix is not Hermitian: max asymmetry " << asym;
    throw InvalidInput(os.str());
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > policy.norm) {
    std::ostringstream os;
    os << "density matrix trace " << tr << " deviates from 1 beyond "
       << policy.norm;
    throw InvalidInput(os.str());
  }
  return DensityMatrix{std::move(m)};
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix{psi.amplitudes * psi.amplitudes.adjoint()};
}

bool DensityMatrix::is_positive(const NumericPolicy& policy) const {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(entries,
                                              Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -policy.psd;
}

Spectrum eig_hermitian(const HermitianOperator& op,
                       const NumericPolicy& policy) {
  (void)policy;  // hermiticity already enforced at construction
  // Symmetrizing removes the last ~1e-13 of asymmetry permitted by the policy.
  const MatrixXcd sym = 0.5 * (op.entries + op.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym);
  require(es.info() == Eigen::Success, "eigensolver failed to converge");
  return Spectrum{es.eigenvalues(), es.eigenvectors()};
}

StateVector evolve(const StateVector& state, const Spectrum& spec, double t) {
  require(state.dim() == spec.dim(),
          "state and spectrum dimensions do not match");
  if (t == 0.0) return state;
  VectorXcd energy_amps = spec.vectors.adjoint() * state.amplitudes;
  for (int l = 0; l < spec.dim(); ++l) {
    energy_amps(l) *= std::polar(1.0, -spec.values(l) * t);
  }
  return StateVector{spec.vectors * energy_amps};
}

namespace {

struct BlockSplit {
  long before = 1;  // product of dims left of the block
  long kept = 1;    // product of kept dims
  long after = 1;   // product of dims right of the block
};

BlockSplit split_dims(const std::vector<int>& site_dims, int keep_first,
                      int keep_count, long total) {
  require(keep_count >= 1, "must keep at least one site");
  require(keep_first >= 0 &&
              keep_first + keep_count <= static_cast<int>(site_dims.size()),
          "kept block out of range");
  BlockSplit s;
  long prod = 1;
  for (int i = 0; i < static_cast<int>(site_dims.size()); ++i) {
    require(site_dims[i] >= 1, "site dimensions must be positive");
    prod *= site_dims[i];
    if (i < keep_first)
      s.before *= site_dims[i];
    else if (i < keep_first + keep_count)
      s.kept *= site_dims[i];
    else
      s.after *= site_dims[i];
  }
  require(prod == total, "product of site dimensions must equal matrix size");
  return s;
}

MatrixXcd trace_out_complement(const MatrixXcd& m,
                               const std::vector<int>& site_dims,
                               int keep_first, int keep_count) {
  const BlockSplit s =
      split_dims(site_dims, keep_first, keep_count, m.rows());
  MatrixXcd out = MatrixXcd::Zero(s.kept, s.kept);
  for (long a = 0; a < s.before; ++a) {
    const long base_a = a * s.kept * s.after;
    for (long x = 0; x < s.kept; ++x) {
      for (long y = 0; y < s.kept; ++y) {
        Complex acc = 0.0;
        const long row0 = base_a + x * s.after;
        const long col0 = base_a + y * s.after;
        for (long b = 0; b < s.after; ++b) acc += m(row0 + b, col0 + b);
        out(x, y) += acc;
      }
    }
  }
  return out;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& site_dims, int keep_first,
                            int keep_count) {
  return DensityMatrix{
      trace_out_complement(rho.entries, site_dims, keep_first, keep_count)};
}

MatrixXcd partial_trace_operator(const MatrixXcd& op,
                                 const std::vector<int>& site_dims,
                                 int keep_first, int keep_count) {
  require(op.rows() == op.cols(), "operator must be square");
  return trace_out_complement(op, site_dims, keep_first, keep_count);
}

}  // namespace obsbound
