#include "obsbound/states.hpp"

#include <cmath>

#include "obsbound/rng.hpp"

namespace obsbound {

StateVector ground_state(const Spectrum& spec) {
  require(spec.dim() > 0, "spectrum is empty");
  return StateVector::normalized(spec.vectors.col(0));
}

StateVector pure_thermal(const Spectrum& spec, std::optional<double> beta) {
  require(spec.dim() > 0, "spectrum is empty");
  double b;
  if (beta.has_value()) {
    require(*beta >= 0.0, "inverse temperature must be nonnegative");
    b = *beta;
  } else {
    const double range = spec.range();
    require(range > 0.0,
            "default beta = 6/(E_N - E_1) needs a nondegenerate spectrum");
    b = 6.0 / range;
  }
  VectorXcd energy_amps(spec.dim());
  const double e0 = spec.ground_energy();
  for (int l = 0; l < spec.dim(); ++l) {
    energy_amps(l) = std::exp(-0.5 * b * (spec.values(l) - e0));
  }
  return StateVector::normalized(spec.vectors * energy_amps);
}

StateVector haar_random(int dim, std::uint64_t seed) {
  require(dim >= 1, "dimension must be positive");
  Rng rng(seed);
  VectorXcd amps(dim);
  for (int l = 0; l < dim; ++l) amps(l) = rng.complex_gaussian();
  return StateVector::normalized(amps);
}

}  // namespace obsbound
