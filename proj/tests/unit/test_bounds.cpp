#include <doctest.h>

#include <cmath>

#include "obsbound/bounds.hpp"
#include "obsbound/states.hpp"
#include "support/instances.hpp"

using namespace obsbound;
using testsupport::make_instance;
using testsupport::random_basis;
using testsupport::random_hermitian;
using testsupport::random_povm;
using testsupport::random_state;

namespace {

Spectrum appendix_spectrum() {
  MatrixXcd h = MatrixXcd::Zero(8, 8);
  const double evs[8] = {0, 1, 2, 2.5, 3, 3.3, 3.7, 4};
  for (int l = 0; l < 8; ++l) h(l, l) = evs[l];
  return eig_hermitian(HermitianOperator::from(h));
}

ProbabilityBounds box_of(VectorXd lower, VectorXd upper) {
  ProbabilityBounds pb;
  pb.lower = std::move(lower);
  pb.upper = std::move(upper);
  return pb;
}

}  // namespace

TEST_CASE("measuring in the target eigenbasis pins a = b = p") {
  Rng rng(51);
  const Spectrum s = eig_hermitian(random_hermitian(6, rng));
  const ProjectiveBasis basis{s.vectors.adjoint(), {}};
  const StateVector psi = random_state(6, rng);
  const VectorXd p = outcome_probabilities(psi, Measurement{basis});
  const OverlapData ov = overlaps_for(Measurement{basis}, s);
  const PointwiseBounds pw = pointwise_bounds(p, *ov.projective);
  CHECK((pw.lower - p).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pw.upper - p).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a certain outcome pins the whole energy distribution") {
  Rng rng(52);
  const Spectrum s = eig_hermitian(random_hermitian(5, rng));
  const ProjectiveBasis basis = random_basis(5, rng);
  // State equal to basis vector 3: p is one-hot there.
  const StateVector psi{basis.bras.row(3).adjoint()};
  const VectorXd p = outcome_probabilities(psi, Measurement{basis});
  const OverlapData ov = overlaps_for(Measurement{basis}, s);
  const PointwiseBounds pw = pointwise_bounds(p, *ov.projective);
  // a_E = b_E = |<i|E>|^2 for every E.
  const VectorXd expected =
      (basis.bras.row(3) * s.vectors).cwiseAbs2().transpose();
  CHECK((pw.lower - expected).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((pw.upper - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("qubit x-measurement of |0> gives the trivial bound") {
  MatrixXcd z(2, 2);
  z << 1, 0, 0, -1;
  const Spectrum s = eig_hermitian(HermitianOperator::from(z));
  MatrixXcd xrows(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  xrows << r, r, r, -r;
  const ProjectiveBasis basis = ProjectiveBasis::from(xrows, {});
  const VectorXd p = VectorXd::Constant(2, 0.5);
  const OverlapData ov = overlaps_for(Measurement{basis}, s);
  const PointwiseBounds pw = pointwise_bounds(p, *ov.projective);
  for (int l = 0; l < 2; ++l) {
    CHECK(pw.upper(l) == doctest::Approx(1.0));
    CHECK(pw.lower(l) == doctest::Approx(0.0));
  }
}

TEST_CASE("pointwise bounds stay ordered inside [0, 1]") {
  Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.word() % 9);
    const Spectrum s = eig_hermitian(random_hermitian(n, rng));
    const ProjectiveBasis basis = random_basis(n, rng);
    const VectorXd p =
        outcome_probabilities(random_state(n, rng), Measurement{basis});
    const OverlapData ov = overlaps_for(Measurement{basis}, s);
    const PointwiseBounds pw = pointwise_bounds(p, *ov.projective);
    for (int l = 0; l < n; ++l) {
      CHECK(pw.lower(l) >= 0.0);
      CHECK(pw.lower(l) <= pw.upper(l));
      CHECK(pw.upper(l) <= 1.0);
    }
  }
}

TEST_CASE("rank-1 projective POVM reproduces the projective bounds") {
  Rng rng(54);
  const int n = 5;
  const Spectrum s = eig_hermitian(random_hermitian(n, rng));
  const ProjectiveBasis basis = random_basis(n, rng);
  std::vector<MatrixXcd> parts;
  for (int i = 0; i < n; ++i) {
    const VectorXcd ket = basis.bras.row(i).adjoint();
    parts.push_back(ket * ket.adjoint());
  }
  const Povm povm = Povm::from_matrices(parts);
  const StateVector psi = random_state(n, rng);
  const VectorXd p = outcome_probabilities(psi, Measurement{basis});
  const OverlapData ov_p = overlaps_for(Measurement{basis}, s);
  const OverlapData ov_q = overlaps_for(Measurement{povm}, s);
  const PointwiseBounds a = pointwise_bounds(p, *ov_p.projective);
  const PointwiseBounds b = povm_pointwise_bounds(p, *ov_q.povm);
  CHECK((a.lower - b.lower).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.upper - b.upper).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-element identity POVM is uninformative") {
  Rng rng(55);
  const int n = 4;
  const Spectrum s = eig_hermitian(random_hermitian(n, rng));
  const Povm povm = Povm::from_matrices({MatrixXcd::Identity(n, n)});
  const VectorXd p = VectorXd::Ones(1);
  const OverlapData ov = overlaps_for(Measurement{povm}, s);
  const PointwiseBounds pw = povm_pointwise_bounds(p, *ov.povm);
  for (int l = 0; l < n; ++l) {
    CHECK(pw.upper(l) == doctest::Approx(1.0));
    CHECK(pw.lower(l) == doctest::Approx(0.0));
  }
}

TEST_CASE("random POVM bounds contain the true distribution") {
  Rng rng(56);
  for (int trial = 0; trial < 30; ++trial) {
    const Spectrum s = eig_hermitian(random_hermitian(3, rng));
    const Povm povm = random_povm(3, 2, rng);
    const StateVector psi = random_state(3, rng);
    const VectorXd p = outcome_probabilities(psi, Measurement{povm});
    const VectorXd true_p = (s.vectors.adjoint() * psi.amplitudes).cwiseAbs2();
    const OverlapData ov = overlaps_for(Measurement{povm}, s);
    const PointwiseBounds pw = povm_pointwise_bounds(p, *ov.povm);
    for (int l = 0; l < 3; ++l) {
      CHECK(true_p(l) >= pw.lower(l) - 1e-10);
      CHECK(true_p(l) <= pw.upper(l) + 1e-10);
    }
  }
}

TEST_CASE("sweep over the single time zero equals the pointwise bounds") {
  Rng rng(57);
  const Spectrum s = eig_hermitian(random_hermitian(6, rng));
  const StateVector psi = random_state(6, rng);
  const ProjectiveBasis basis = random_basis(6, rng);
  MeasurementSet ms;
  ms.items.push_back(TimedMeasurement{Measurement{basis}, {0.0}});
  const ProbabilityBounds pb = sweep(psi, s, ms);
  const VectorXd p = outcome_probabilities(psi, Measurement{basis});
  const OverlapData ov = overlaps_for(Measurement{basis}, s);
  const PointwiseBounds pw = pointwise_bounds(p, *ov.projective);
  CHECK((pb.lower - pw.lower).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((pb.upper - pw.upper).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(pb.outcome_ranges[0][2].minimum ==
        doctest::Approx(p(2)).epsilon(1e-12));
}

TEST_CASE("refining the time grid never loosens the bounds") {
  Rng rng(58);
  const Spectrum s = eig_hermitian(random_hermitian(7, rng));
  const StateVector psi = random_state(7, rng);
  const ProjectiveBasis basis = random_basis(7, rng);
  std::vector<double> coarse{0.0, 1.0, 2.5};
  std::vector<double> fine = coarse;
  fine.push_back(0.7);
  fine.push_back(1.9);
  MeasurementSet ms_coarse, ms_fine;
  ms_coarse.items.push_back(TimedMeasurement{Measurement{basis}, coarse});
  ms_fine.items.push_back(TimedMeasurement{Measurement{basis}, fine});
  const ProbabilityBounds a = sweep(psi, s, ms_coarse);
  const ProbabilityBounds b = sweep(psi, s, ms_fine);
  for (int l = 0; l < 7; ++l) {
    CHECK(b.lower(l) >= a.lower(l));
    CHECK(b.upper(l) <= a.upper(l));
  }
}

TEST_CASE("serial and parallel sweeps are bitwise identical") {
  for (std::uint64_t seed : {101, 102, 103}) {
    const testsupport::RandomInstance inst = make_instance(seed);
    const ProbabilityBounds a =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    const ProbabilityBounds b =
        sweep_serial(inst.state, inst.spectrum, inst.ms, inst.conserved);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    REQUIRE(a.outcome_ranges.size() == b.outcome_ranges.size());
    for (std::size_t m = 0; m < a.outcome_ranges.size(); ++m) {
      for (std::size_t i = 0; i < a.outcome_ranges[m].size(); ++i) {
        CHECK(a.outcome_ranges[m][i].minimum ==
              b.outcome_ranges[m][i].minimum);
        CHECK(a.outcome_ranges[m][i].maximum ==
              b.outcome_ranges[m][i].maximum);
      }
    }
  }
}

TEST_CASE("non-conserved targets require a single time-zero grid") {
  Rng rng(59);
  const Spectrum s = eig_hermitian(random_hermitian(4, rng));
  const StateVector psi = random_state(4, rng);
  const ProjectiveBasis basis = random_basis(4, rng);
  MeasurementSet multi;
  multi.items.push_back(TimedMeasurement{Measurement{basis}, {0.0, 1.0}});
  CHECK_THROWS_AS(sweep(psi, s, multi, /*conserved=*/false), InvalidInput);
  MeasurementSet nonzero;
  nonzero.items.push_back(TimedMeasurement{Measurement{basis}, {1.0}});
  CHECK_THROWS_AS(sweep(psi, s, nonzero, /*conserved=*/false), InvalidInput);
  MeasurementSet ok;
  ok.items.push_back(TimedMeasurement{Measurement{basis}, {0.0}});
  CHECK_NOTHROW(sweep(psi, s, ok, /*conserved=*/false));
}

TEST_CASE("sweep rejects an empty measurement set") {
  Rng rng(60);
  const Spectrum s = eig_hermitian(random_hermitian(3, rng));
  const StateVector psi = random_state(3, rng);
  CHECK_THROWS_AS(sweep(psi, s, MeasurementSet{}), InvalidInput);
}

TEST_CASE("quadratic forms of coarse projectors are diagonal bin sums") {
  const Spectrum s = appendix_spectrum();
  const Povm povm = coarse_energy_povm(s, 1.0);
  const auto quads = quadratic_forms(Measurement{povm}, s);
  REQUIRE(quads.size() == 5);
  // Third element covers eigenvalues {2, 2.5} (indices 2 and 3).
  const MatrixXd& above = quads[2].above;
  CHECK(max_abs((above - quads[2].below).cast<Complex>()) < 1e-14);
  for (int l = 0; l < 8; ++l) {
    for (int m = 0; m < 8; ++m) {
      const double expected = (l == m && (l == 2 || l == 3)) ? 1.0 : 0.0;
      CHECK(above(l, m) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("quadratic form of the identity POVM is the identity") {
  Rng rng(61);
  const Spectrum s = eig_hermitian(random_hermitian(4, rng));
  const Povm povm = Povm::from_matrices({MatrixXcd::Identity(4, 4)});
  const auto quads = quadratic_forms(Measurement{povm}, s);
  REQUIRE(quads.size() == 1);
  CHECK(max_abs((quads[0].above - MatrixXd::Identity(4, 4)).cast<Complex>()) <
        1e-12);
  CHECK(max_abs((quads[0].below - MatrixXd::Identity(4, 4)).cast<Complex>()) <
        1e-12);
}

TEST_CASE("Monte Carlo sandwich check on a random projector outcome") {
  Rng rng(62);
  const int n = 5;
  const Spectrum s = eig_hermitian(random_hermitian(n, rng));
  const ProjectiveBasis basis = random_basis(n, rng);
  const auto quads = quadratic_forms(Measurement{basis}, s);
  for (int trial = 0; trial < 1000; ++trial) {
    const StateVector psi = random_state(n, rng);
    const VectorXd p = outcome_probabilities(psi, Measurement{basis});
    const VectorXd sqrt_true =
        (s.vectors.adjoint() * psi.amplitudes).cwiseAbs();
    for (int i = 0; i < n; ++i) {
      const double below = sqrt_true.dot(quads[i].below * sqrt_true);
      const double above = sqrt_true.dot(quads[i].above * sqrt_true);
      CHECK(below <= p(i) + 1e-10);
      CHECK(above >= p(i) - 1e-10);
    }
  }
}

TEST_CASE("analytic interval reproduces the coarse-measurement example") {
  const Spectrum s = appendix_spectrum();
  VectorXd lower = VectorXd::Zero(8);
  VectorXd upper(8);
  upper << 0, 0, 0.5, 0.5, 0.5, 0.5, 0.5, 0;
  const Interval iv = analytic_interval(box_of(lower, upper), s.values);
  CHECK(iv.lower == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(iv.upper == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("fully determined box collapses the interval") {
  VectorXd onehot = VectorXd::Zero(5);
  onehot(3) = 1.0;
  VectorXd values(5);
  values << -2, -1, 0, 1, 2;
  const Interval iv = analytic_interval(box_of(onehot, onehot), values);
  CHECK(iv.lower == doctest::Approx(1.0));
  CHECK(iv.upper == doctest::Approx(1.0));
}

TEST_CASE("analytic interval rejects infeasible boxes by name") {
  VectorXd values(3);
  values << 0, 1, 2;
  CHECK_THROWS_WITH_AS(
      analytic_interval(
          box_of(VectorXd::Constant(3, 0.5), VectorXd::Constant(3, 0.6)),
          values),
      doctest::Contains("lower"), InfeasibleData);
  CHECK_THROWS_WITH_AS(
      analytic_interval(
          box_of(VectorXd::Zero(3), VectorXd::Constant(3, 0.2)), values),
      doctest::Contains("upper"), InfeasibleData);
}

TEST_CASE("even moments follow the transformed-value order") {
  // Spectrum straddling zero: for k = 2 the fill order follows E^2, so all
  // mass lands on the least-|E| eigenvalue for the lower endpoint.
  VectorXd values(4);
  values << -3, -0.5, 1, 2;
  VectorXd lower = VectorXd::Zero(4);
  VectorXd upper = VectorXd::Ones(4);
  const Interval iv2 = analytic_interval(box_of(lower, upper), values, 2);
  CHECK(iv2.lower == doctest::Approx(0.25));  // all mass on E = -0.5
  CHECK(iv2.upper == doctest::Approx(9.0));   // all mass on E = -3
}

TEST_CASE("moment-k intervals contain the true k-th moment") {
  for (std::uint64_t seed : {201, 202, 203, 204, 205}) {
    const testsupport::RandomInstance inst = make_instance(seed);
    const ProbabilityBounds pb =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    for (int k = 1; k <= 2; ++k) {
      VectorXd v(inst.spectrum.dim());
      for (int l = 0; l < v.size(); ++l)
        v(l) = std::pow(inst.spectrum.values(l), k);
      const double truth = v.dot(inst.true_p);
      const Interval iv = analytic_interval(pb, inst.spectrum.values, k);
      CHECK(iv.lower <= truth + 1e-9);
      CHECK(iv.upper >= truth - 1e-9);
    }
  }
}

TEST_CASE("containment and sandwich hold on random instances") {
  for (std::uint64_t seed = 300; seed < 330; ++seed) {
    const testsupport::RandomInstance inst = make_instance(seed);
    const ProbabilityBounds pb =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    for (int l = 0; l < inst.spectrum.dim(); ++l) {
      CHECK(inst.true_p(l) >= pb.lower(l) - 1e-10);
      CHECK(inst.true_p(l) <= pb.upper(l) + 1e-10);
    }
    const VectorXd sqrt_p = inst.true_p.cwiseMax(0.0).cwiseSqrt();
    const FeasibleSet fs = testsupport::feasible_set_of(inst, pb);
    for (const QuadraticConstraint& qc : fs.quads) {
      CHECK(sqrt_p.dot(qc.below * sqrt_p) <= qc.outcome_min + 1e-10);
      CHECK(sqrt_p.dot(qc.above * sqrt_p) >= qc.outcome_max - 1e-10);
    }
  }
}

TEST_CASE("quality factors") {
  VectorXd values(5);
  values << -2, -1, 0, 1, 2;
  const QualityFactors full = quality_factors(-2.0, 2.0, values);
  CHECK(full.range_excluded_pct == doctest::Approx(0.0));
  CHECK(full.states_excluded_pct == doctest::Approx(0.0));
  const QualityFactors half = quality_factors(-1.0, 1.0, values);
  CHECK(half.range_excluded_pct == doctest::Approx(50.0));
  CHECK(half.states_excluded_pct == doctest::Approx(40.0));
  const QualityFactors point = quality_factors(0.5, 0.5, values);
  CHECK(point.range_excluded_pct == doctest::Approx(100.0));
  CHECK(point.states_excluded_pct == doctest::Approx(100.0));
  CHECK_THROWS_AS(quality_factors(0.0, 0.0, VectorXd::Ones(3)), InvalidInput);
}
