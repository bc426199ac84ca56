#pragma once

#include <cstdint>
#include <optional>

#include "obsbound/spectral.hpp"

namespace obsbound {

/// Ground state: the eigenvector of the smallest eigenvalue.
StateVector ground_state(const Spectrum& spec);

/// Superposition of energy eigenvectors with amplitudes proportional to
/// exp(-beta E / 2). With no beta given, beta defaults to 6 / (E_N - E_1),
/// which requires a nondegenerate spectral range. Amplitudes are shifted by
/// the ground energy before exponentiation to avoid overflow.
StateVector pure_thermal(const Spectrum& spec,
                         std::optional<double> beta = std::nullopt);

/// Haar-random pure state: normalized vector of independent standard complex
/// Gaussians drawn from Rng(seed).
StateVector haar_random(int dim, std::uint64_t seed);

}  // namespace obsbound
