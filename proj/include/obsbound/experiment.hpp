#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obsbound/estimator.hpp"
#include "obsbound/measurements.hpp"
#include "obsbound/models.hpp"
#include "obsbound/numeric.hpp"

namespace obsbound {

inline constexpr const char* kVersion = "obsbound 1.0.0";

/// Target system of an experiment: either one of the spin-chain models
/// restricted to a symmetry sector, or an explicitly given diagonal
/// observable (for small worked examples).
struct SystemConfig {
  bool diagonal = false;
  std::vector<double> eigenvalues;  // diagonal systems only
  ModelSpec model;                  // spin-chain systems only
  SectorKind sector = SectorKind::Full;
  int particles = 0;
};

struct StateConfig {
  enum class Kind { Ground, Thermal, Haar, Vector } kind = Kind::Ground;
  std::optional<double> beta;      // Thermal
  std::vector<Complex> amplitudes; // Vector
  std::string label;
};

struct MeasurementConfig {
  enum class Method {
    Computational,
    GroundStateOptimized,
    ObservableOptimized1,
    ObservableOptimized2,
    Coarse,
    ExplicitBasis
  } method = Method::Computational;
  int block_size = 0;    // k; 0 means the plain computational basis
  double delta_e = 0.0;  // Coarse
  MatrixXcd rows;        // ExplicitBasis
};

struct MeasurementSetConfig {
  std::string label;
  std::vector<MeasurementConfig> specs;
};

struct TimeGridConfig {
  double total = 160.0;
  int points = 401;
  bool include_endpoint = true;

  std::vector<double> grid() const;
};

struct EstimatorConfig {
  bool enabled = false;
  OptimizerSettings settings;
};

struct SeedConfig {
  std::uint64_t disorder = 1;
  std::uint64_t haar = 2;
  std::uint64_t optimizer = 3;
};

struct ExperimentConfig {
  SystemConfig system;
  std::vector<StateConfig> states;
  std::vector<MeasurementSetConfig> measurement_sets;
  TimeGridConfig time;
  EstimatorConfig estimator;
  std::vector<int> moments{1};
  SeedConfig seeds;
  std::string output_label = "run";
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Schema and cross-field checks only; returns one message per violation.
std::vector<std::string> validate_config(const ExperimentConfig& config);

struct MomentRecord {
  int moment = 1;
  double true_value = 0.0;
  Interval analytic;
  std::optional<Interval> tight;
  QualityFactors analytic_quality;
  std::optional<QualityFactors> tight_quality;
};

struct ResultRecord {
  std::string state_label;
  std::string set_label;
  std::vector<MomentRecord> moments;
  VectorXd bound_lower;  // per eigenvalue index
  VectorXd bound_upper;
};

struct RunOutput {
  std::vector<ResultRecord> records;
  VectorXd eigenvalues;
  std::vector<double> disorder;
  std::vector<std::string> written_files;
};

/// Executes the experiment and writes the bound tables and the summary file
/// under `output_dir`. Identical config and seeds produce byte-identical
/// files regardless of thread count.
RunOutput run_experiment(const ExperimentConfig& config,
                         const std::string& output_dir);

}  // namespace obsbound
