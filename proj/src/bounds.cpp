#include "obsbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace obsbound {

namespace {

/// a * b with the columns of the result computed in fixed-size chunks, one
/// chunk per task. Chunk boundaries do not depend on the thread count, and
/// every output column is produced by the same sequential kernel, so the
/// result is bitwise identical for any schedule.
MatrixXcd product_by_columns(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows(), b.cols());
  const long cols = b.cols();
  const long chunk = 32;
  const long chunks = (cols + chunk - 1) / chunk;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < chunks; ++c) {
    const long first = c * chunk;
    const long width = std::min(chunk, cols - first);
    out.middleCols(first, width).noalias() = a * b.middleCols(first, width);
  }
  return out;
}

}  // namespace

OverlapData overlaps_for(const Measurement& m, const Spectrum& spec) {
  require(measurement_dim(m) == spec.dim(),
          "measurement and spectrum dimensions do not match");
  OverlapData out;
  if (const auto* basis = std::get_if<ProjectiveBasis>(&m)) {
    ProjectiveOverlaps ov;
    ov.g = product_by_columns(basis->bras, spec.vectors).cwiseAbs();
    ov.g_sq = ov.g.cwiseProduct(ov.g);
    out.projective = std::move(ov);
  } else {
    const auto& povm = std::get<Povm>(m);
    const int n = povm.outcomes();
    const int d = spec.dim();
    PovmOverlaps ov;
    ov.diag.resize(n, d);
    ov.x_min.resize(n, d);
    ov.y_max.resize(n, d);
    ov.gamma_floor.resize(n);
    ov.volume.resize(n);
    for (int i = 0; i < n; ++i) {
      const PovmElement& el = povm.elements[i];
      // rows: positive-gamma eigenvectors, cols: energy index
      const MatrixXd w2 = (el.vectors.adjoint() * spec.vectors).cwiseAbs2();
      for (int l = 0; l < d; ++l) {
        double diag = 0.0, x = 0.0, y = 0.0;
        for (int k = 0; k < el.gammas.size(); ++k) {
          const double gk = el.gammas(k);
          const double o = w2(k, l);
          diag += gk * o;
          const double xk = gk * o;
          if (k == 0 || xk < x) x = xk;
          if (o > y) y = o;
        }
        ov.diag(i, l) = diag;
        ov.x_min(i, l) = x;
        ov.y_max(i, l) = y;
      }
      ov.gamma_floor(i) = el.gammas.size() > 0 ? el.gammas.minCoeff() : 0.0;
      ov.volume(i) = el.volume;
    }
    out.povm = std::move(ov);
  }
  return out;
}

namespace {

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

PointwiseBounds pointwise_bounds(const VectorXd& p,
                                 const ProjectiveOverlaps& ov) {
  require(p.size() == ov.g.rows(),
          "probability vector does not match overlap data");
  const VectorXd sqrt_p = p.cwiseMax(0.0).cwiseSqrt();
  const int d = static_cast<int>(ov.g.cols());
  PointwiseBounds out;
  out.lower.resize(d);
  out.upper.resize(d);
  const VectorXd col_b = ov.g.transpose() * sqrt_p;       // sum_i sqrt(p) g
  const VectorXd col_s = ov.g_sq.transpose() * p.cwiseMax(0.0);
  for (int l = 0; l < d; ++l) {
    const double b = clip01(col_b(l) * col_b(l));
    const double a = std::min(std::max(2.0 * col_s(l) - b, 0.0), b);
    out.upper(l) = b;
    out.lower(l) = a;
  }
  return out;
}

PointwiseBounds povm_pointwise_bounds(const VectorXd& p,
                                      const PovmOverlaps& ov) {
  require(p.size() == ov.diag.rows(),
          "probability vector does not match overlap data");
  const int n = static_cast<int>(ov.diag.rows());
  const int d = static_cast<int>(ov.diag.cols());
  PointwiseBounds out;
  out.lower.resize(d);
  out.upper.resize(d);
  for (int l = 0; l < d; ++l) {
    double sb = 0.0, s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pi = std::max(p(i), 0.0);
      sb += std::sqrt(pi * std::max(ov.diag(i, l), 0.0));
      s1 += pi * (ov.x_min(i, l) + ov.gamma_floor(i) * ov.y_max(i, l));
      s2 += std::sqrt(pi * ov.y_max(i, l) * ov.volume(i));
    }
    const double b = clip01(sb * sb);
    const double a = std::min(std::max(s1 - s2 * s2, 0.0), b);
    out.upper(l) = b;
    out.lower(l) = a;
  }
  return out;
}

PointwiseBounds pointwise_bounds_any(const VectorXd& p,
                                     const OverlapData& ov) {
  if (ov.projective.has_value()) return pointwise_bounds(p, *ov.projective);
  require(ov.povm.has_value(), "overlap data is empty");
  return povm_pointwise_bounds(p, *ov.povm);
}

namespace {

/// Everything needed to evaluate one measurement's outcome probabilities at
/// an arbitrary time, precomputed in the energy eigenbasis.
struct MeasurementWorkspace {
  OverlapData overlaps;
  int outcomes = 0;
  bool pure = true;
  // pure state: amplitude maps applied to phase-rotated energy amplitudes
  VectorXcd energy_amps;             // V^dag psi
  MatrixXcd row_map;                 // projective: bras * V
  std::vector<MatrixXcd> elem_maps;  // POVM: vectors_i^dag * V
  std::vector<VectorXd> elem_gammas;
  // mixed state
  MatrixXcd rho_energy;               // V^dag rho V
  std::vector<MatrixXcd> elem_energy; // POVM elements in the energy basis
  VectorXd values;                    // eigenvalues for phase factors

  VectorXd probabilities(double t) const {
    const int d = static_cast<int>(values.size());
    VectorXcd phase(d);
    for (int l = 0; l < d; ++l) phase(l) = std::polar(1.0, -values(l) * t);
    VectorXd p(outcomes);
    if (pure) {
      const VectorXcd rotated = phase.cwiseProduct(energy_amps);
      if (row_map.size() > 0) {
        p = (row_map * rotated).cwiseAbs2();
      } else {
        for (int i = 0; i < outcomes; ++i) {
          const VectorXcd amps = elem_maps[i] * rotated;
          p(i) = (elem_gammas[i].array() * amps.cwiseAbs2().array()).sum();
        }
      }
    } else {
      const MatrixXcd rho_t =
          phase.asDiagonal() * rho_energy * phase.adjoint().asDiagonal();
      if (row_map.size() > 0) {
        for (int i = 0; i < outcomes; ++i) {
          p(i) = (row_map.row(i) * rho_t * row_map.row(i).adjoint())(0, 0)
                     .real();
        }
      } else {
        for (int i = 0; i < outcomes; ++i) {
          p(i) = (elem_energy[i] * rho_t).trace().real();
        }
      }
    }
    for (int i = 0; i < outcomes; ++i) p(i) = std::max(p(i), 0.0);
    return p;
  }
};

MeasurementWorkspace make_workspace(const Measurement& m, const Spectrum& spec,
                                    const QuantumState& state) {
  MeasurementWorkspace ws;
  ws.overlaps = overlaps_for(m, spec);
  ws.outcomes = measurement_outcomes(m);
  ws.values = spec.values;
  ws.pure = std::holds_alternative<StateVector>(state);
  if (ws.pure) {
    const auto& psi = std::get<StateVector>(state);
    require(psi.dim() == spec.dim(), "state dimension mismatch");
    ws.energy_amps = spec.vectors.adjoint() * psi.amplitudes;
  } else {
    const auto& rho = std::get<DensityMatrix>(state);
    require(rho.dim() == spec.dim(), "state dimension mismatch");
    ws.rho_energy = product_by_columns(
        spec.vectors.adjoint() * rho.entries, spec.vectors);
  }
  if (const auto* basis = std::get_if<ProjectiveBasis>(&m)) {
    ws.row_map = product_by_columns(basis->bras, spec.vectors);
  } else {
    const auto& povm = std::get<Povm>(m);
    for (const PovmElement& el : povm.elements) {
      if (ws.pure) {
        ws.elem_maps.push_back(el.vectors.adjoint() * spec.vectors);
        ws.elem_gammas.push_back(el.gammas);
      } else {
        ws.elem_energy.push_back(spec.vectors.adjoint() * el.matrix *
                                 spec.vectors);
      }
    }
  }
  return ws;
}

struct Cell {
  int measurement = 0;
  double time = 0.0;
};

struct CellResult {
  PointwiseBounds bounds;
  VectorXd p;
};

CellResult evaluate_cell(const MeasurementWorkspace& ws, double t) {
  CellResult r;
  r.p = ws.probabilities(t);
  r.bounds = pointwise_bounds_any(r.p, ws.overlaps);
  return r;
}

ProbabilityBounds reduce_cells(const std::vector<Cell>& cells,
                               const std::vector<CellResult>& results,
                               const MeasurementSet& ms, int dim,
                               const NumericPolicy& policy) {
  ProbabilityBounds pb;
  pb.lower = VectorXd::Zero(dim);
  pb.upper = VectorXd::Ones(dim);
  pb.outcome_ranges.resize(ms.items.size());
  for (std::size_t mi = 0; mi < ms.items.size(); ++mi) {
    pb.outcome_ranges[mi].assign(
        measurement_outcomes(ms.items[mi].measurement), OutcomeRange{1.0, 0.0});
  }
  // Fixed reduction order: cells were laid out measurement-major, time-minor.
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellResult& r = results[c];
    pb.lower = pb.lower.cwiseMax(r.bounds.lower);
    pb.upper = pb.upper.cwiseMin(r.bounds.upper);
    auto& ranges = pb.outcome_ranges[cells[c].measurement];
    for (int i = 0; i < r.p.size(); ++i) {
      ranges[i].minimum = std::min(ranges[i].minimum, r.p(i));
      ranges[i].maximum = std::max(ranges[i].maximum, r.p(i));
    }
  }
  for (int l = 0; l < dim; ++l) {
    if (pb.lower(l) > pb.upper(l)) {
      if (pb.lower(l) - pb.upper(l) > policy.feasibility) {
        std::ostringstream os;
        os << "infeasible bounds at eigenvalue index " << l << ": lower "
           << pb.lower(l) << " exceeds upper " << pb.upper(l);
        throw InfeasibleData(os.str());
      }
      pb.lower(l) = pb.upper(l);
    }
  }
  return pb;
}

std::vector<Cell> layout_cells(const MeasurementSet& ms, bool conserved) {
  require(!ms.items.empty(), "measurement set is empty");
  std::vector<Cell> cells;
  for (std::size_t mi = 0; mi < ms.items.size(); ++mi) {
    const auto& item = ms.items[mi];
    require(!item.times.empty(), "time grid is empty");
    for (double t : item.times) {
      require(t >= 0.0, "measurement times must be nonnegative");
      if (!conserved) {
        require(item.times.size() == 1 && t == 0.0,
                "non-conserved target: the time grid must be the single time "
                "0 (evolve the state before the call)");
      }
      cells.push_back(Cell{static_cast<int>(mi), t});
    }
  }
  return cells;
}

ProbabilityBounds sweep_impl(const QuantumState& state, const Spectrum& spec,
                             const MeasurementSet& ms, bool conserved,
                             const NumericPolicy& policy, bool parallel) {
  const std::vector<Cell> cells = layout_cells(ms, conserved);
  std::vector<MeasurementWorkspace> workspaces;
  workspaces.reserve(ms.items.size());
  for (const auto& item : ms.items) {
    workspaces.push_back(make_workspace(item.measurement, spec, state));
  }
  std::vector<CellResult> results(cells.size());
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long c = 0; c < static_cast<long>(cells.size()); ++c) {
      results[c] = evaluate_cell(workspaces[cells[c].measurement],
                                 cells[c].time);
    }
  } else {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      results[c] = evaluate_cell(workspaces[cells[c].measurement],
                                 cells[c].time);
    }
  }
  return reduce_cells(cells, results, ms, spec.dim(), policy);
}

}  // namespace

ProbabilityBounds sweep(const QuantumState& state, const Spectrum& spec,
                        const MeasurementSet& ms, bool conserved,
                        const NumericPolicy& policy) {
  return sweep_impl(state, spec, ms, conserved, policy, true);
}

ProbabilityBounds sweep_serial(const QuantumState& state, const Spectrum& spec,
                               const MeasurementSet& ms, bool conserved,
                               const NumericPolicy& policy) {
  return sweep_impl(state, spec, ms, conserved, policy, false);
}

std::vector<QuadraticConstraint> quadratic_forms(
    const Measurement& m, const Spectrum& spec,
    const std::vector<OutcomeRange>* ranges, int measurement_index) {
  require(measurement_dim(m) == spec.dim(),
          "measurement and spectrum dimensions do not match");
  const int d = spec.dim();
  const int n = measurement_outcomes(m);
  if (ranges != nullptr) {
    require(static_cast<int>(ranges->size()) == n,
            "outcome range count does not match measurement");
  }
  std::vector<QuadraticConstraint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    MatrixXd abs_form(d, d);
    if (const auto* basis = std::get_if<ProjectiveBasis>(&m)) {
      const VectorXcd ket = basis->bras.row(i).adjoint();
      const VectorXd t = (spec.vectors.adjoint() * ket).cwiseAbs();
      abs_form = t * t.transpose();
    } else {
      const auto& povm = std::get<Povm>(m);
      abs_form = (spec.vectors.adjoint() * povm.elements[i].matrix *
                  spec.vectors)
                     .cwiseAbs();
    }
    QuadraticConstraint qc;
    qc.above = abs_form;
    qc.below = -abs_form;
    qc.below.diagonal() = abs_form.diagonal();
    if (ranges != nullptr) {
      qc.outcome_min = (*ranges)[i].minimum;
      qc.outcome_max = (*ranges)[i].maximum;
    }
    qc.measurement_index = measurement_index;
    qc.outcome_index = i;
    out.push_back(std::move(qc));
  }
  return out;
}

namespace {

std::vector<int> order_by_value(const VectorXd& v, bool ascending) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return ascending ? v(a) < v(b) : v(a) > v(b);
  });
  return idx;
}

/// Greedy fill: start every entry at its floor, then top entries up to their
/// ceiling in the given order until the total reaches one.
VectorXd greedy_fill(const VectorXd& floor, const VectorXd& ceil,
                     const std::vector<int>& order) {
  VectorXd p = floor;
  double budget = std::max(0.0, 1.0 - floor.sum());
  for (int l : order) {
    const double add = std::min(ceil(l) - floor(l), budget);
    if (add > 0.0) {
      p(l) += add;
      budget -= add;
    }
    if (budget <= 0.0) break;
  }
  return p;
}

}  // namespace

Interval analytic_interval(const ProbabilityBounds& pb, const VectorXd& values,
                           int moment, VectorXd* arg_lower,
                           VectorXd* arg_upper, const NumericPolicy& policy) {
  require(moment >= 1, "moment must be at least 1");
  require(pb.lower.size() == values.size() && pb.upper.size() == values.size(),
          "bounds and eigenvalue vector sizes differ");
  const double floor_sum = pb.lower.sum();
  const double ceil_sum = pb.upper.sum();
  if (floor_sum > 1.0 + policy.feasibility) {
    std::ostringstream os;
    os << "infeasible bounds: sum of lower bounds " << floor_sum
       << " exceeds 1";
    throw InfeasibleData(os.str());
  }
  if (ceil_sum < 1.0 - policy.feasibility) {
    std::ostringstream os;
    os << "infeasible bounds: sum of upper bounds " << ceil_sum
       << " is below 1";
    throw InfeasibleData(os.str());
  }
  VectorXd v(values.size());
  for (int l = 0; l < values.size(); ++l)
    v(l) = moment == 1 ? values(l) : std::pow(values(l), moment);

  const VectorXd lo_dist =
      greedy_fill(pb.lower, pb.upper, order_by_value(v, true));
  const VectorXd hi_dist =
      greedy_fill(pb.lower, pb.upper, order_by_value(v, false));
  if (arg_lower != nullptr) *arg_lower = lo_dist;
  if (arg_upper != nullptr) *arg_upper = hi_dist;
  return Interval{v.dot(lo_dist), v.dot(hi_dist)};
}

QualityFactors quality_factors(double lower, double upper,
                               const VectorXd& values) {
  require(values.size() >= 1, "empty eigenvalue vector");
  require(lower <= upper, "interval is inverted");
  const double vmin = values.minCoeff();
  const double vmax = values.maxCoeff();
  const double range = vmax - vmin;
  require(range > 0.0, "degenerate spectral range");
  const double slack = 1e-9 * std::max(1.0, std::abs(vmax) + std::abs(vmin));
  require(lower >= vmin - slack && upper <= vmax + slack,
          "interval exceeds the spectral range");
  const double lo = std::max(lower, vmin);
  const double hi = std::min(upper, vmax);
  long inside = 0;
  for (int l = 0; l < values.size(); ++l) {
    if (values(l) >= lo && values(l) <= hi) ++inside;
  }
  QualityFactors q;
  q.range_excluded_pct = (1.0 - (hi - lo) / range) * 100.0;
  q.states_excluded_pct =
      (1.0 - static_cast<double>(inside) / static_cast<double>(values.size())) *
      100.0;
  return q;
}

QualityFactors quality_factors(double lower, double upper,
                               const Spectrum& spec) {
  return quality_factors(lower, upper, spec.values);
}

}  // namespace obsbound
