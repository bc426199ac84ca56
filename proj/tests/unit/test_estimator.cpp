#include <doctest.h>

#include <cmath>

#include "obsbound/estimator.hpp"
#include "obsbound/states.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace obsbound;
using testsupport::brute_force_interval;
using testsupport::feasible_set_of;
using testsupport::make_instance;

namespace {

Spectrum appendix_spectrum() {
  MatrixXcd h = MatrixXcd::Zero(8, 8);
  const double evs[8] = {0, 1, 2, 2.5, 3, 3.3, 3.7, 4};
  for (int l = 0; l < 8; ++l) h(l, l) = evs[l];
  return eig_hermitian(HermitianOperator::from(h));
}

}  // namespace

TEST_CASE("projection onto the box-simplex polytope") {
  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.word() % 6);
    VectorXd p(n), floor(n), ceil(n);
    for (int l = 0; l < n; ++l) p(l) = -std::log1p(-rng.uniform01());
    p /= p.sum();
    for (int l = 0; l < n; ++l) {
      floor(l) = p(l) * 0.5 * rng.uniform01();
      ceil(l) = std::min(1.0, p(l) + 0.5 * rng.uniform01());
    }
    VectorXd x(n);
    for (int l = 0; l < n; ++l) x(l) = rng.uniform(-0.5, 1.5);
    const VectorXd proj = project_box_simplex(x, floor, ceil);
    CHECK(std::abs(proj.sum() - 1.0) < 1e-10);
    for (int l = 0; l < n; ++l) {
      CHECK(proj(l) >= floor(l) - 1e-12);
      CHECK(proj(l) <= ceil(l) + 1e-12);
    }
  }
}

TEST_CASE("without quadratic constraints the tight interval is analytic") {
  Rng rng(82);
  FeasibleSet fs;
  fs.box.lower = VectorXd::Zero(6);
  fs.box.upper = VectorXd::Ones(6);
  for (int l = 0; l < 6; ++l) fs.box.upper(l) = rng.uniform(0.3, 1.0);
  VectorXd values(6);
  values << -3, -1, 0, 0.5, 2, 4;
  OptimizerSettings settings;
  const EstimateResult er = constrained_interval(fs, values, 1, settings);
  CHECK(er.tight.lower == er.analytic.lower);
  CHECK(er.tight.upper == er.analytic.upper);
  CHECK_FALSE(er.diagnostics.degraded);
}

TEST_CASE("coarse-measurement bin constraints tighten 2.25..3.5 to 2.5..3.1") {
  const Spectrum s = appendix_spectrum();
  const Povm povm = coarse_energy_povm(s, 1.0);
  VectorXcd amps = VectorXcd::Zero(8);
  amps(2) = amps(4) = 1.0 / std::sqrt(2.0);
  const StateVector psi{amps};
  MeasurementSet ms;
  ms.items.push_back(TimedMeasurement{Measurement{povm}, {0.0}});
  const ProbabilityBounds pb = sweep(psi, s, ms);

  FeasibleSet fs;
  fs.box = pb;
  fs.quads = quadratic_forms(Measurement{povm}, s, &pb.outcome_ranges[0], 0);
  OptimizerSettings settings;
  const EstimateResult er = constrained_interval(fs, s.values, 1, settings);
  CHECK(er.analytic.lower == doctest::Approx(2.25).epsilon(1e-9));
  CHECK(er.analytic.upper == doctest::Approx(3.5).epsilon(1e-9));
  CHECK(er.tight.lower == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(er.tight.upper == doctest::Approx(3.1).epsilon(1e-3));
}

TEST_CASE("tight intervals stay nested and contain the truth") {
  for (std::uint64_t seed = 400; seed < 412; ++seed) {
    const testsupport::RandomInstance inst = make_instance(seed);
    const ProbabilityBounds pb =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    const FeasibleSet fs = feasible_set_of(inst, pb);
    OptimizerSettings settings;
    settings.restarts = 6;
    const EstimateResult er =
        constrained_interval(fs, inst.spectrum.values, 1, settings);
    const double truth = inst.spectrum.values.dot(inst.true_p);
    CHECK(er.analytic.lower <= truth + 1e-9);
    CHECK(er.analytic.upper >= truth - 1e-9);
    CHECK(er.tight.lower >= er.analytic.lower - 1e-9);
    CHECK(er.tight.upper <= er.analytic.upper + 1e-9);
    CHECK(er.tight.lower <= truth + settings.constraint_tolerance * 10);
    CHECK(er.tight.upper >= truth - settings.constraint_tolerance * 10);
  }
}

TEST_CASE("estimator matches the brute-force oracle on small instances") {
  for (std::uint64_t seed = 500; seed < 505; ++seed) {
    const testsupport::RandomInstance inst =
        testsupport::make_sampleable_instance(seed, 5);
    const ProbabilityBounds pb =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    const FeasibleSet fs = feasible_set_of(inst, pb);
    OptimizerSettings settings;
    const EstimateResult er =
        constrained_interval(fs, inst.spectrum.values, 1, settings);
    const Interval oracle =
        brute_force_interval(fs, inst.spectrum.values, 200000, seed * 7 + 1,
                             &inst.true_p);
    CHECK(std::abs(er.tight.lower - oracle.lower) < 1e-3);
    CHECK(std::abs(er.tight.upper - oracle.upper) < 1e-3);
  }
}

TEST_CASE("adding quadratic constraints never widens the interval") {
  for (std::uint64_t seed = 600; seed < 606; ++seed) {
    const testsupport::RandomInstance inst = make_instance(seed);
    const ProbabilityBounds pb =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    FeasibleSet full = feasible_set_of(inst, pb);
    if (full.quads.size() < 2) continue;
    FeasibleSet half = full;
    half.quads.resize(full.quads.size() / 2);
    OptimizerSettings settings;
    settings.restarts = 6;
    const EstimateResult er_half =
        constrained_interval(half, inst.spectrum.values, 1, settings);
    const EstimateResult er_full =
        constrained_interval(full, inst.spectrum.values, 1, settings);
    CHECK(er_full.tight.lower >= er_half.tight.lower - 1e-6);
    CHECK(er_full.tight.upper <= er_half.tight.upper + 1e-6);
  }
}

TEST_CASE("estimator output is deterministic") {
  const testsupport::RandomInstance inst = make_instance(700);
  const ProbabilityBounds pb =
      sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
  const FeasibleSet fs = feasible_set_of(inst, pb);
  OptimizerSettings settings;
  settings.seed = 9;
  const EstimateResult a =
      constrained_interval(fs, inst.spectrum.values, 1, settings);
  const EstimateResult b =
      constrained_interval(fs, inst.spectrum.values, 1, settings);
  CHECK(a.tight.lower == b.tight.lower);
  CHECK(a.tight.upper == b.tight.upper);
}

TEST_CASE("infeasible boxes are rejected with a descriptive error") {
  FeasibleSet fs;
  fs.box.lower = VectorXd::Constant(4, 0.5);
  fs.box.upper = VectorXd::Constant(4, 0.6);
  VectorXd values(4);
  values << 0, 1, 2, 3;
  OptimizerSettings settings;
  CHECK_THROWS_AS(constrained_interval(fs, values, 1, settings),
                  InfeasibleData);
}

TEST_CASE("second-moment estimation stays valid") {
  for (std::uint64_t seed = 800; seed < 804; ++seed) {
    const testsupport::RandomInstance inst = make_instance(seed);
    const ProbabilityBounds pb =
        sweep(inst.state, inst.spectrum, inst.ms, inst.conserved);
    const FeasibleSet fs = feasible_set_of(inst, pb);
    OptimizerSettings settings;
    settings.restarts = 4;
    const EstimateResult er =
        constrained_interval(fs, inst.spectrum.values, 2, settings);
    VectorXd v(inst.spectrum.dim());
    for (int l = 0; l < v.size(); ++l)
      v(l) = inst.spectrum.values(l) * inst.spectrum.values(l);
    const double truth = v.dot(inst.true_p);
    CHECK(er.tight.lower <= truth + 1e-4);
    CHECK(er.tight.upper >= truth - 1e-4);
  }
}
