#include "obsbound/measurements.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace obsbound {

namespace {

void check_rows_orthonormal(const MatrixXcd& rows,
                            const NumericPolicy& policy) {
  const MatrixXcd gram = rows * rows.adjoint();
  const double dev =
      max_abs(gram - MatrixXcd::Identity(rows.rows(), rows.rows()));
  if (dev > policy.orthonormality) {
    std::ostringstream os;
    os << "basis rows are not orthonormal: max |R R^dag - I| = " << dev;
    throw InvalidInput(os.str());
  }
}

std::vector<std::string> default_labels(int n, const std::string& prefix) {
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = prefix + std::to_string(i);
  return labels;
}

/// Multiplies a vector by the phase that makes its largest-modulus entry
/// real and positive (lowest index wins near-ties).
void fix_phase(Eigen::Ref<VectorXcd> v) {
  int arg = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best * (1.0 + 1e-12)) {
      best = a;
      arg = i;
    }
  }
  if (best == 0.0) return;
  v *= std::conj(v(arg)) / std::abs(v(arg));
}

/// Eigenbasis of a Hermitian matrix ordered by descending eigenvalue, with
/// a deterministic basis inside each degenerate cluster: canonical basis
/// vectors are projected onto the cluster subspace in index order and
/// Gram-Schmidt orthonormalized.
MatrixXcd descending_eigenbasis(const MatrixXcd& m, double tie_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m);
  require(es.info() == Eigen::Success, "eigensolver failed to converge");
  const int n = static_cast<int>(m.rows());
  VectorXd vals = es.eigenvalues().reverse();
  MatrixXcd vecs = es.eigenvectors().rowwise().reverse();

  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n && std::abs(vals(end) - vals(start)) <= tie_tol) ++end;
    const int g = end - start;
    if (g > 1) {
      const MatrixXcd sub = vecs.middleCols(start, g);
      const MatrixXcd proj = sub * sub.adjoint();
      MatrixXcd replacement(n, g);
      int accepted = 0;
      for (int j = 0; j < n && accepted < g; ++j) {
        VectorXcd w = proj.col(j);  // projection of e_j onto the cluster
        for (int a = 0; a < accepted; ++a) {
          w -= replacement.col(a).dot(w) * replacement.col(a);
        }
        const double nw = w.norm();
        if (nw > 1e-8) replacement.col(accepted++) = w / nw;
      }
      require(accepted == g, "degenerate cluster basis completion failed");
      vecs.middleCols(start, g) = replacement;
    }
    start = end;
  }
  for (int c = 0; c < n; ++c) fix_phase(vecs.col(c));
  return vecs;
}

/// Tensor product of per-block bases given as bra-row matrices.
MatrixXcd kron_rows(const std::vector<MatrixXcd>& blocks) {
  MatrixXcd acc = MatrixXcd::Ones(1, 1);
  for (const MatrixXcd& b : blocks) {
    MatrixXcd next(acc.rows() * b.rows(), acc.cols() * b.cols());
    for (int i = 0; i < acc.rows(); ++i) {
      for (int j = 0; j < acc.cols(); ++j) {
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
            acc(i, j) * b;
      }
    }
    acc.swap(next);
  }
  return acc;
}

std::vector<std::string> block_labels(const std::vector<MatrixXcd>& blocks) {
  std::vector<std::string> labels{""};
  for (const MatrixXcd& b : blocks) {
    std::vector<std::string> next;
    next.reserve(labels.size() * b.rows());
    for (const std::string& prefix : labels) {
      for (int i = 0; i < b.rows(); ++i) {
        next.push_back(prefix.empty() ? std::to_string(i)
                                      : prefix + "." + std::to_string(i));
      }
    }
    labels.swap(next);
  }
  return labels;
}

}  // namespace

ProjectiveBasis ProjectiveBasis::from(MatrixXcd rows,
                                      std::vector<std::string> labels,
                                      const NumericPolicy& policy) {
  require(rows.rows() == rows.cols() && rows.rows() > 0,
          "projective basis must be a square matrix");
  check_rows_orthonormal(rows, policy);
  if (labels.empty())
    labels = default_labels(static_cast<int>(rows.rows()), "i");
  require(static_cast<int>(labels.size()) == rows.rows(),
          "label count must match basis size");
  return ProjectiveBasis{std::move(rows), std::move(labels)};
}

Povm Povm::from_matrices(std::vector<MatrixXcd> matrices,
                         std::vector<std::string> labels,
                         const NumericPolicy& policy) {
  require(!matrices.empty(), "POVM needs at least one element");
  const int n = static_cast<int>(matrices[0].rows());
  MatrixXcd total = MatrixXcd::Zero(n, n);
  Povm povm;
  povm.dimension = n;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const MatrixXcd& m = matrices[i];
    require(m.rows() == n && m.cols() == n,
            "POVM elements must share one dimension");
    require(max_abs(m - m.adjoint()) <= policy.hermiticity,
            "POVM element is not Hermitian");
    total += m;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m);
    require(es.info() == Eigen::Success, "eigensolver failed on POVM element");
    require(es.eigenvalues().minCoeff() >= -policy.psd,
            "POVM element is not positive semi-definite");
    int kept = 0;
    for (int k = 0; k < n; ++k)
      if (es.eigenvalues()(k) > policy.povm_prune) ++kept;
    PovmElement el;
    el.matrix = m;
    el.vectors.resize(n, kept);
    el.gammas.resize(kept);
    int w = 0;
    for (int k = 0; k < n; ++k) {
      if (es.eigenvalues()(k) > policy.povm_prune) {
        el.gammas(w) = std::min(es.eigenvalues()(k), 1.0);
        el.vectors.col(w) = es.eigenvectors().col(k);
        ++w;
      }
    }
    el.volume = m.trace().real();
    povm.elements.push_back(std::move(el));
  }
  const double dev = max_abs(total - MatrixXcd::Identity(n, n));
  if (dev > policy.orthonormality) {
    std::ostringstream os;
    os << "POVM completeness violated: max |sum Pi - I| = " << dev;
    throw InvalidInput(os.str());
  }
  povm.labels = labels.empty()
                    ? default_labels(static_cast<int>(matrices.size()), "o")
                    : std::move(labels);
  require(povm.labels.size() == povm.elements.size(),
          "label count must match POVM element count");
  return povm;
}

int measurement_dim(const Measurement& m) {
  return std::visit([](const auto& v) { return v.dim(); }, m);
}

int measurement_outcomes(const Measurement& m) {
  return std::visit([](const auto& v) { return v.outcomes(); }, m);
}

ProjectiveBasis computational_basis(const SymmetrySector& sector) {
  const int d = sector.dim();
  std::vector<std::string> labels(d);
  for (int i = 0; i < d; ++i) labels[i] = sector.bitstring(i);
  return ProjectiveBasis{MatrixXcd::Identity(d, d), std::move(labels)};
}

VectorXcd embed_in_full(const VectorXcd& sector_vec,
                        const SymmetrySector& sector) {
  require(sector_vec.size() == sector.dim(),
          "vector dimension does not match sector");
  VectorXcd full = VectorXcd::Zero(1L << sector.length);
  for (int j = 0; j < sector.dim(); ++j)
    full(sector.basis_indices[j]) = sector_vec(j);
  return full;
}

ProjectiveBasis project_to_sector(const ProjectiveBasis& full_basis,
                                  const SymmetrySector& sector,
                                  const NumericPolicy& policy) {
  require(full_basis.dim() == (1L << sector.length),
          "basis does not live in the sector's full space");
  const int d = sector.dim();
  if (sector.kind == SectorKind::Full) return full_basis;

  MatrixXcd rows(d, d);
  std::vector<std::string> labels;
  int accepted = 0;
  // Two Gram-Schmidt passes keep the completion vectors orthonormal even
  // when they start nearly parallel to accepted rows.
  auto try_accept = [&](VectorXcd row, const std::string& label) {
    if (accepted == d) return;
    if (row.norm() <= policy.embed_drop) return;
    for (int pass = 0; pass < 2; ++pass) {
      for (int a = 0; a < accepted; ++a) {
        const Complex overlap = rows.row(a).dot(row);
        row -= overlap * rows.row(a).transpose();
      }
    }
    const double n = row.norm();
    if (n <= policy.embed_drop) return;
    rows.row(accepted) = (row / n).transpose();
    labels.push_back(label);
    ++accepted;
  };

  for (int i = 0; i < full_basis.dim(); ++i) {
    VectorXcd restricted(d);
    for (int j = 0; j < d; ++j)
      restricted(j) = full_basis.bras(i, sector.basis_indices[j]);
    try_accept(std::move(restricted), full_basis.labels[i]);
  }
  for (int j = 0; j < d && accepted < d; ++j) {
    VectorXcd e = VectorXcd::Zero(d);
    e(j) = 1.0;
    try_accept(std::move(e), "completed:" + sector.bitstring(j));
  }
  require(accepted == d, "sector projection failed to span the sector");
  return ProjectiveBasis{std::move(rows), std::move(labels)};
}

ProjectiveBasis klocal_ground_state_basis(const StateVector& full_state,
                                          int length, int block_size,
                                          const NumericPolicy& policy) {
  require(block_size >= 1 && length % block_size == 0,
          "block size must divide the chain length");
  require(full_state.dim() == (1L << length),
          "state must live in the full 2^L space");
  const std::vector<int> dims(length, 2);
  const DensityMatrix rho = DensityMatrix::pure(full_state);
  std::vector<MatrixXcd> blocks;
  const int nblocks = length / block_size;
  for (int b = 0; b < nblocks; ++b) {
    const DensityMatrix reduced =
        partial_trace(rho, dims, b * block_size, block_size);
    const MatrixXcd basis =
        descending_eigenbasis(reduced.entries, 1e-10);
    blocks.push_back(basis.adjoint());  // rows are bras
  }
  MatrixXcd rows = kron_rows(blocks);
  auto labels = block_labels(blocks);
  (void)policy;
  return ProjectiveBasis{std::move(rows), std::move(labels)};
}

ProjectiveBasis klocal_observable_basis_type1(const ModelSpec& spec,
                                              const SymmetrySector& sector,
                                              int block_size) {
  require(block_size >= 1 && spec.length % block_size == 0,
          "block size must divide the chain length");
  std::vector<MatrixXcd> blocks;
  for (int b = 0; b * block_size < spec.length; ++b) {
    const MatrixXcd h = block_local_hamiltonian(spec, b * block_size,
                                                block_size);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    require(es.info() == Eigen::Success, "eigensolver failed on block");
    blocks.push_back(es.eigenvectors().adjoint());
  }
  MatrixXcd rows = kron_rows(blocks);
  auto labels = block_labels(blocks);
  ProjectiveBasis full{std::move(rows), std::move(labels)};
  return project_to_sector(full, sector);
}

ProjectiveBasis klocal_observable_basis_type2(const HermitianOperator& op,
                                              int length, int block_size) {
  require(block_size >= 1 && length % block_size == 0,
          "block size must divide the chain length");
  require(op.dim() == (1L << length),
          "observable must live in the full 2^L space");
  const std::vector<int> dims(length, 2);
  std::vector<MatrixXcd> blocks;
  for (int b = 0; b * block_size < length; ++b) {
    const MatrixXcd reduced = partial_trace_operator(
        op.entries, dims, b * block_size, block_size);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(reduced);
    require(es.info() == Eigen::Success, "eigensolver failed on block");
    blocks.push_back(es.eigenvectors().adjoint());
  }
  MatrixXcd rows = kron_rows(blocks);
  auto labels = block_labels(blocks);
  return ProjectiveBasis{std::move(rows), std::move(labels)};
}

MatrixXcd measurement_unitary(const std::vector<MatrixXcd>& local_bras,
                              const NumericPolicy& policy) {
  require(!local_bras.empty(), "need at least one block");
  for (const MatrixXcd& b : local_bras) {
    require(b.rows() == b.cols(), "local bases must be square");
    check_rows_orthonormal(b, policy);
  }
  return kron_rows(local_bras);
}

Povm coarse_energy_povm(const Spectrum& spec, double delta_e) {
  require(delta_e > 0.0, "energy resolution must be positive");
  const double anchor = spec.ground_energy();
  std::map<long, std::vector<int>> bins;
  for (int l = 0; l < spec.dim(); ++l) {
    const long m = static_cast<long>(
        std::floor((spec.values(l) - anchor) / delta_e));
    bins[m].push_back(l);
  }
  Povm povm;
  povm.dimension = spec.dim();
  for (const auto& [m, members] : bins) {
    PovmElement el;
    el.vectors.resize(spec.dim(), members.size());
    el.gammas = VectorXd::Ones(members.size());
    for (std::size_t k = 0; k < members.size(); ++k)
      el.vectors.col(k) = spec.vectors.col(members[k]);
    el.matrix = el.vectors * el.vectors.adjoint();
    el.volume = static_cast<double>(members.size());
    povm.elements.push_back(std::move(el));
    std::ostringstream os;
    os << "bin[" << anchor + m * delta_e << "," << anchor + (m + 1) * delta_e
       << ")";
    povm.labels.push_back(os.str());
  }
  return povm;
}

namespace {

VectorXd finalize_probabilities(VectorXd p, const NumericPolicy& policy) {
  for (int i = 0; i < p.size(); ++i) {
    if (p(i) < 0.0) {
      require(p(i) >= -1e-8, "outcome probability is significantly negative");
      p(i) = 0.0;
    }
  }
  const double total = p.sum();
  if (std::abs(total - 1.0) > policy.prob_sum) {
    std::ostringstream os;
    os << "outcome probabilities sum to " << total << " (deficit "
       << 1.0 - total << " beyond tolerance " << policy.prob_sum << ")";
    throw InfeasibleData(os.str());
  }
  return p;
}

}  // namespace

VectorXd outcome_probabilities(const StateVector& state, const Measurement& m,
                               const NumericPolicy& policy) {
  require(state.dim() == measurement_dim(m),
          "state and measurement dimensions do not match");
  VectorXd p(measurement_outcomes(m));
  if (const auto* basis = std::get_if<ProjectiveBasis>(&m)) {
    p = (basis->bras * state.amplitudes).cwiseAbs2();
  } else {
    const auto& povm = std::get<Povm>(m);
    for (int i = 0; i < povm.outcomes(); ++i) {
      const PovmElement& el = povm.elements[i];
      const VectorXcd amps = el.vectors.adjoint() * state.amplitudes;
      p(i) = (el.gammas.array() * amps.cwiseAbs2().array()).sum();
    }
  }
  return finalize_probabilities(std::move(p), policy);
}

VectorXd outcome_probabilities(const DensityMatrix& rho, const Measurement& m,
                               const NumericPolicy& policy) {
  require(rho.dim() == measurement_dim(m),
          "state and measurement dimensions do not match");
  VectorXd p(measurement_outcomes(m));
  if (const auto* basis = std::get_if<ProjectiveBasis>(&m)) {
    for (int i = 0; i < basis->outcomes(); ++i) {
      // <i| rho |i> with row i holding <i|.
      p(i) = (basis->bras.row(i) * rho.entries *
              basis->bras.row(i).adjoint())(0, 0)
                 .real();
    }
  } else {
    const auto& povm = std::get<Povm>(m);
    for (int i = 0; i < povm.outcomes(); ++i) {
      p(i) = (povm.elements[i].matrix * rho.entries).trace().real();
    }
  }
  return finalize_probabilities(std::move(p), policy);
}

VectorXd measurement_volumes(const Measurement& m) {
  if (std::holds_alternative<ProjectiveBasis>(m)) {
    return VectorXd::Ones(measurement_outcomes(m));
  }
  const auto& povm = std::get<Povm>(m);
  VectorXd v(povm.outcomes());
  for (int i = 0; i < povm.outcomes(); ++i) v(i) = povm.elements[i].volume;
  return v;
}

double observational_entropy(const VectorXd& p, const VectorXd& volumes) {
  require(p.size() == volumes.size(),
          "probability and volume vectors must match");
  require(std::abs(p.sum() - 1.0) <= 1e-8, "probabilities must sum to 1");
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    require(volumes(i) >= 1.0, "volumes must be at least 1");
    if (p(i) > 0.0) s -= p(i) * std::log(p(i) / volumes(i));
  }
  return s;
}

}  // namespace obsbound
