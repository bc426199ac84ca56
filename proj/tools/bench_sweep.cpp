// Benchmark of the parallel sweep kernel against the serial reference on a
// representative disordered-chain workload; also verifies the two paths
// produce bitwise-identical bounds.
#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "obsbound/bounds.hpp"
#include "obsbound/models.hpp"
#include "obsbound/states.hpp"

using namespace obsbound;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  int length = 10;
  int points = 401;
  if (argc > 1) length = std::atoi(argv[1]);
  if (argc > 2) points = std::atoi(argv[2]);

  ModelSpec model;
  model.kind = ModelKind::Heisenberg;
  model.length = length;
  model.disorder_strength = 10.0;
  model.seed = 1;
  const SymmetrySector sector =
      sector_basis(length, SectorKind::SpinZ, length / 2);
  const Spectrum spec = eig_hermitian(build_hamiltonian(model, sector));
  const StateVector psi = pure_thermal(spec);

  std::vector<double> grid(points);
  for (int j = 0; j < points; ++j) grid[j] = 160.0 * j / (points - 1);
  MeasurementSet ms;
  ms.items.push_back(TimedMeasurement{computational_basis(sector), grid});

  std::printf("sweep benchmark: D = %d, %d time points\n", sector.dim(),
              points);

#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
  omp_set_num_threads(1);  // fully single-threaded reference baseline
#else
  const int max_threads = 1;
#endif
  auto t0 = std::chrono::steady_clock::now();
  const ProbabilityBounds serial = sweep_serial(psi, spec, ms);
  const double t_serial = seconds_since(t0);
  std::printf("  serial          %8.3f s\n", t_serial);
  for (int threads = 1; threads <= max_threads; threads *= 2) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    t0 = std::chrono::steady_clock::now();
    const ProbabilityBounds parallel = sweep(psi, spec, ms);
    const double t_par = seconds_since(t0);
    const bool identical = parallel.lower == serial.lower &&
                           parallel.upper == serial.upper;
    std::printf("  openmp x%-2d      %8.3f s   speedup %5.2f   bitwise %s\n",
                threads, t_par, t_serial / t_par,
                identical ? "identical" : "DIFFERENT");
    if (!identical) return 1;
  }
  return 0;
}
