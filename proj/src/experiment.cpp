#include "obsbound/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "obsbound/bounds.hpp"
#include "obsbound/spectral.hpp"
#include "obsbound/states.hpp"

namespace obsbound {

using nlohmann::json;

std::vector<double> TimeGridConfig::grid() const {
  std::vector<double> t(points);
  if (points == 1) {
    t[0] = 0.0;
    return t;
  }
  const double step =
      include_endpoint ? total / (points - 1) : total / points;
  for (int j = 0; j < points; ++j) t[j] = j * step;
  return t;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw InvalidInput("unknown key \"" + item.key() + "\" in " + context);
    }
  }
}

Complex parse_complex(const json& j, const std::string& context) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return Complex(j[0].get<double>(), j[1].get<double>());
  }
  throw InvalidInput("expected a number or [re, im] pair in " + context);
}

SystemConfig parse_system(const json& j) {
  check_keys(j,
             {"kind", "length", "disorder_strength", "seed", "couplings",
              "sector", "eigenvalues"},
             "system");
  SystemConfig sys;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "diagonal") {
    sys.diagonal = true;
    for (const auto& e : j.at("eigenvalues")) {
      sys.eigenvalues.push_back(e.get<double>());
    }
    return sys;
  }
  if (kind == "heisenberg")
    sys.model.kind = ModelKind::Heisenberg;
  else if (kind == "ising")
    sys.model.kind = ModelKind::Ising;
  else if (kind == "xy")
    sys.model.kind = ModelKind::XY;
  else if (kind == "pxp")
    sys.model.kind = ModelKind::PXP;
  else
    throw InvalidInput("unknown system kind \"" + kind + "\"");
  sys.model.length = j.at("length").get<int>();
  sys.model.disorder_strength = j.value("disorder_strength", 0.0);
  if (j.contains("couplings")) {
    const json& c = j.at("couplings");
    check_keys(c, {"j0", "alpha", "field", "omega"}, "system.couplings");
    sys.model.j0 = c.value("j0", 1.0);
    sys.model.alpha = c.value("alpha", 0.0);
    sys.model.field = c.value("field", 0.0);
    sys.model.omega = c.value("omega", 1.0);
  }
  const json& s = j.at("sector");
  check_keys(s, {"kind", "particles"}, "system.sector");
  const std::string sk = s.at("kind").get<std::string>();
  if (sk == "spin-z") {
    sys.sector = SectorKind::SpinZ;
    sys.particles = s.at("particles").get<int>();
  } else if (sk == "parity-even") {
    sys.sector = SectorKind::ParityEven;
  } else if (sk == "full") {
    sys.sector = SectorKind::Full;
  } else {
    throw InvalidInput("unknown sector kind \"" + sk + "\"");
  }
  return sys;
}

StateConfig parse_state(const json& j, int index) {
  check_keys(j, {"kind", "beta", "amplitudes", "label"}, "states entry");
  StateConfig st;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ground")
    st.kind = StateConfig::Kind::Ground;
  else if (kind == "thermal") {
    st.kind = StateConfig::Kind::Thermal;
    if (j.contains("beta")) st.beta = j.at("beta").get<double>();
  } else if (kind == "haar")
    st.kind = StateConfig::Kind::Haar;
  else if (kind == "vector") {
    st.kind = StateConfig::Kind::Vector;
    for (const auto& a : j.at("amplitudes"))
      st.amplitudes.push_back(parse_complex(a, "state amplitudes"));
  } else {
    throw InvalidInput("unknown state kind \"" + kind + "\"");
  }
  st.label = j.value("label", kind + (index > 0 ? std::to_string(index) : ""));
  return st;
}

MeasurementConfig parse_measurement(const json& j) {
  check_keys(j, {"method", "k", "delta_e", "rows"}, "measurement spec");
  MeasurementConfig mc;
  const std::string method = j.at("method").get<std::string>();
  if (method == "computational")
    mc.method = MeasurementConfig::Method::Computational;
  else if (method == "gs-opt")
    mc.method = MeasurementConfig::Method::GroundStateOptimized;
  else if (method == "obs-opt-1")
    mc.method = MeasurementConfig::Method::ObservableOptimized1;
  else if (method == "obs-opt-2")
    mc.method = MeasurementConfig::Method::ObservableOptimized2;
  else if (method == "coarse")
    mc.method = MeasurementConfig::Method::Coarse;
  else if (method == "basis")
    mc.method = MeasurementConfig::Method::ExplicitBasis;
  else
    throw InvalidInput("unknown measurement method \"" + method + "\"");
  mc.block_size = j.value("k", 0);
  mc.delta_e = j.value("delta_e", 0.0);
  if (j.contains("rows")) {
    const json& rows = j.at("rows");
    const int n = static_cast<int>(rows.size());
    mc.rows.resize(n, n);
    for (int r = 0; r < n; ++r) {
      const json& row = rows.at(r);
      if (static_cast<int>(row.size()) != n)
        throw InvalidInput("basis rows must form a square matrix");
      for (int c = 0; c < n; ++c)
        mc.rows(r, c) = parse_complex(row.at(c), "measurement rows");
    }
  }
  return mc;
}

MeasurementSetConfig parse_measurement_set(const json& j, int index) {
  MeasurementSetConfig set;
  set.label = "m" + std::to_string(index);
  if (j.is_array()) {
    for (const auto& spec : j) set.specs.push_back(parse_measurement(spec));
  } else if (j.is_object() && j.contains("specs")) {
    check_keys(j, {"label", "specs"}, "measurement set");
    set.label = j.value("label", set.label);
    for (const auto& spec : j.at("specs"))
      set.specs.push_back(parse_measurement(spec));
  } else {
    set.specs.push_back(parse_measurement(j));
  }
  if (set.specs.empty())
    throw InvalidInput("measurement set " + set.label + " is empty");
  return set;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"system", "states", "measurements", "time", "estimator",
              "moments", "seeds", "output"},
             "config");
  ExperimentConfig cfg;
  cfg.system = parse_system(j.at("system"));
  int si = 0;
  for (const auto& st : j.at("states")) cfg.states.push_back(parse_state(st, si++));
  int mi = 0;
  for (const auto& ms : j.at("measurements"))
    cfg.measurement_sets.push_back(parse_measurement_set(ms, mi++));
  if (j.contains("time")) {
    const json& t = j.at("time");
    check_keys(t, {"total", "points", "include_endpoint"}, "time");
    cfg.time.total = t.value("total", 160.0);
    cfg.time.points = t.value("points", 401);
    cfg.time.include_endpoint = t.value("include_endpoint", true);
  }
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    check_keys(e,
               {"enabled", "constraint_tolerance", "objective_tolerance",
                "max_iterations", "restarts"},
               "estimator");
    cfg.estimator.enabled = e.value("enabled", false);
    cfg.estimator.settings.constraint_tolerance =
        e.value("constraint_tolerance", 1e-6);
    cfg.estimator.settings.objective_tolerance =
        e.value("objective_tolerance", 1e-8);
    cfg.estimator.settings.max_iterations = e.value("max_iterations", 400);
    cfg.estimator.settings.restarts = e.value("restarts", 8);
  }
  if (j.contains("moments")) {
    cfg.moments.clear();
    for (const auto& m : j.at("moments")) cfg.moments.push_back(m.get<int>());
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    check_keys(s, {"disorder", "haar", "optimizer"}, "seeds");
    cfg.seeds.disorder = s.value("disorder", std::uint64_t{1});
    cfg.seeds.haar = s.value("haar", std::uint64_t{2});
    cfg.seeds.optimizer = s.value("optimizer", std::uint64_t{3});
  }
  cfg.output_label = j.value("output", "run");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  auto fail = [&errors](const std::string& msg) { errors.push_back(msg); };

  if (cfg.system.diagonal) {
    if (cfg.system.eigenvalues.empty())
      fail("diagonal system needs a nonempty eigenvalue list");
  } else {
    const ModelSpec& m = cfg.system.model;
    if (m.length < 2 || m.length > 20)
      fail("chain length must lie in [2, 20]");
    if (m.disorder_strength < 0.0) fail("disorder strength must be >= 0");
    if ((m.kind == ModelKind::Ising || m.kind == ModelKind::XY) &&
        m.alpha <= 0.0)
      fail("long-range models need couplings.alpha > 0");
    switch (m.kind) {
      case ModelKind::Heisenberg:
      case ModelKind::XY:
        if (cfg.system.sector == SectorKind::ParityEven)
          fail("incompatible sector: spin-z conserving model with a parity "
               "sector");
        if (cfg.system.sector == SectorKind::SpinZ &&
            (cfg.system.particles < 0 || cfg.system.particles > m.length))
          fail("particle count must lie in [0, L]");
        break;
      case ModelKind::Ising:
        if (cfg.system.sector == SectorKind::SpinZ)
          fail("incompatible sector: the Ising chain conserves only parity");
        break;
      case ModelKind::PXP:
        if (cfg.system.sector != SectorKind::Full)
          fail("incompatible sector: PXP runs on the full space");
        break;
    }
  }
  if (cfg.states.empty()) fail("at least one state is required");
  for (const StateConfig& st : cfg.states) {
    if (st.kind == StateConfig::Kind::Thermal && st.beta.has_value() &&
        *st.beta < 0.0)
      fail("thermal state needs beta >= 0");
    if (st.kind == StateConfig::Kind::Vector && st.amplitudes.empty())
      fail("vector state needs amplitudes");
  }
  if (cfg.measurement_sets.empty()) fail("at least one measurement set is "
                                         "required");
  for (const MeasurementSetConfig& set : cfg.measurement_sets) {
    for (const MeasurementConfig& mc : set.specs) {
      using Method = MeasurementConfig::Method;
      const bool klocal = mc.method == Method::GroundStateOptimized ||
                          mc.method == Method::ObservableOptimized1 ||
                          mc.method == Method::ObservableOptimized2;
      if (klocal) {
        if (cfg.system.diagonal) {
          fail("set " + set.label +
               ": k-local methods need a spin-chain system");
        } else if (mc.block_size != 0 &&
                   (mc.block_size < 1 ||
                    cfg.system.model.length % mc.block_size != 0)) {
          fail("set " + set.label + ": k = " + std::to_string(mc.block_size) +
               " does not divide L = " +
               std::to_string(cfg.system.model.length));
        }
      }
      if (mc.method == Method::Coarse && mc.delta_e <= 0.0)
        fail("set " + set.label + ": coarse measurement needs delta_e > 0");
      if (mc.method == Method::ExplicitBasis && mc.rows.size() == 0)
        fail("set " + set.label + ": explicit basis needs rows");
    }
  }
  if (cfg.time.points < 1) fail("time.points must be >= 1");
  if (cfg.time.total < 0.0) fail("time.total must be >= 0");
  for (int k : cfg.moments)
    if (k < 1) fail("moments must be >= 1");
  if (cfg.output_label.empty()) fail("output label must be nonempty");
  return errors;
}

namespace {

struct BuiltSystem {
  Spectrum spectrum;
  SymmetrySector sector;  // meaningful only when has_sector
  bool has_sector = false;
};

BuiltSystem build_system(const ExperimentConfig& cfg) {
  BuiltSystem sys;
  if (cfg.system.diagonal) {
    const int n = static_cast<int>(cfg.system.eigenvalues.size());
    MatrixXcd h = MatrixXcd::Zero(n, n);
    for (int l = 0; l < n; ++l) h(l, l) = cfg.system.eigenvalues[l];
    sys.spectrum = eig_hermitian(HermitianOperator::from(std::move(h)));
    return sys;
  }
  ModelSpec model = cfg.system.model;
  model.seed = cfg.seeds.disorder;
  sys.sector = sector_basis(model.length, cfg.system.sector,
                            cfg.system.particles);
  sys.has_sector = true;
  sys.spectrum = eig_hermitian(build_hamiltonian(model, sys.sector));
  return sys;
}

StateVector build_state(const StateConfig& st, const BuiltSystem& sys,
                        const ExperimentConfig& cfg, int haar_index) {
  switch (st.kind) {
    case StateConfig::Kind::Ground:
      return ground_state(sys.spectrum);
    case StateConfig::Kind::Thermal:
      return pure_thermal(sys.spectrum, st.beta);
    case StateConfig::Kind::Haar:
      return haar_random(sys.spectrum.dim(),
                         cfg.seeds.haar + static_cast<std::uint64_t>(haar_index));
    case StateConfig::Kind::Vector: {
      VectorXcd amps(st.amplitudes.size());
      for (std::size_t i = 0; i < st.amplitudes.size(); ++i)
        amps(i) = st.amplitudes[i];
      require(amps.size() == sys.spectrum.dim(),
              "state amplitudes do not match the system dimension");
      return StateVector::normalized(std::move(amps));
    }
  }
  throw InvalidInput("unreachable state kind");
}

Measurement build_measurement(const MeasurementConfig& mc,
                              const BuiltSystem& sys,
                              const ExperimentConfig& cfg) {
  using Method = MeasurementConfig::Method;
  ModelSpec model = cfg.system.model;
  model.seed = cfg.seeds.disorder;

  auto computational = [&sys]() -> Measurement {
    if (sys.has_sector) return computational_basis(sys.sector);
    const int n = sys.spectrum.dim();
    std::vector<std::string> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = std::to_string(i);
    return ProjectiveBasis{MatrixXcd::Identity(n, n), std::move(labels)};
  };

  switch (mc.method) {
    case Method::Computational:
      return computational();
    case Method::GroundStateOptimized: {
      if (mc.block_size == 0) return computational();
      const StateVector ground = ground_state(sys.spectrum);
      const StateVector full{embed_in_full(ground.amplitudes, sys.sector)};
      const ProjectiveBasis basis = klocal_ground_state_basis(
          full, model.length, mc.block_size);
      return project_to_sector(basis, sys.sector);
    }
    case Method::ObservableOptimized1: {
      if (mc.block_size == 0) return computational();
      return klocal_observable_basis_type1(model, sys.sector, mc.block_size);
    }
    case Method::ObservableOptimized2: {
      if (mc.block_size == 0) return computational();
      const SymmetrySector full = sector_basis(model.length, SectorKind::Full);
      const HermitianOperator h_full = build_hamiltonian(model, full);
      const ProjectiveBasis basis = klocal_observable_basis_type2(
          h_full, model.length, mc.block_size);
      return project_to_sector(basis, sys.sector);
    }
    case Method::Coarse:
      return coarse_energy_povm(sys.spectrum, mc.delta_e);
    case Method::ExplicitBasis:
      return ProjectiveBasis::from(mc.rows, {});
  }
  throw InvalidInput("unreachable measurement method");
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                          c == '_'
                      ? c
                      : '_');
  }
  return out;
}

void write_bounds_table(const std::string& path, const VectorXd& values,
                        const VectorXd& lower, const VectorXd& upper) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, "cannot open output file " + path);
  std::fprintf(f, "# index\teigenvalue\tlower\tupper\n");
  for (int l = 0; l < values.size(); ++l) {
    std::fprintf(f, "%d\t%.17g\t%.17g\t%.17g\n", l, values(l), lower(l),
                 upper(l));
  }
  std::fclose(f);
}

json interval_json(const Interval& iv) {
  return json::array({iv.lower, iv.upper});
}

json quality_json(const QualityFactors& q) {
  return json{{"range_excluded_pct", q.range_excluded_pct},
              {"states_excluded_pct", q.states_excluded_pct}};
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg,
                         const std::string& output_dir) {
  {
    const std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty()) {
      std::string joined = "invalid config:";
      for (const std::string& e : errors) joined += "\n  - " + e;
      throw InvalidInput(joined);
    }
  }
  std::filesystem::create_directories(output_dir);

  const BuiltSystem sys = build_system(cfg);
  const VectorXd& values = sys.spectrum.values;
  const std::vector<double> grid = cfg.time.grid();

  RunOutput out;
  out.eigenvalues = values;
  if (!cfg.system.diagonal) {
    ModelSpec model = cfg.system.model;
    model.seed = cfg.seeds.disorder;
    out.disorder = disorder_fields(model);
  }

  // Build measurements once per set; states once each.
  std::vector<std::vector<Measurement>> built_sets;
  for (const MeasurementSetConfig& set : cfg.measurement_sets) {
    std::vector<Measurement> ms;
    for (const MeasurementConfig& mc : set.specs)
      ms.push_back(build_measurement(mc, sys, cfg));
    built_sets.push_back(std::move(ms));
  }
  std::vector<StateVector> states;
  for (std::size_t i = 0; i < cfg.states.size(); ++i)
    states.push_back(build_state(cfg.states[i], sys, cfg,
                                 static_cast<int>(i)));

  json summary;
  summary["version"] = kVersion;
  summary["output"] = cfg.output_label;
  summary["seeds"] = {{"disorder", cfg.seeds.disorder},
                      {"haar", cfg.seeds.haar},
                      {"optimizer", cfg.seeds.optimizer}};
  summary["time"] = {{"total", cfg.time.total},
                     {"points", cfg.time.points},
                     {"include_endpoint", cfg.time.include_endpoint}};
  summary["disorder"] = out.disorder;
  summary["eigenvalues"] = std::vector<double>(values.data(),
                                               values.data() + values.size());
  summary["results"] = json::array();

  for (std::size_t si = 0; si < states.size(); ++si) {
    const StateVector& psi = states[si];
    const VectorXd p_true =
        (sys.spectrum.vectors.adjoint() * psi.amplitudes).cwiseAbs2();
    for (std::size_t gi = 0; gi < built_sets.size(); ++gi) {
      MeasurementSet ms;
      for (const Measurement& m : built_sets[gi])
        ms.items.push_back(TimedMeasurement{m, grid});
      const ProbabilityBounds pb = sweep(psi, sys.spectrum, ms);

      std::vector<QuadraticConstraint> quads;
      if (cfg.estimator.enabled) {
        for (std::size_t mi = 0; mi < ms.items.size(); ++mi) {
          auto qs = quadratic_forms(ms.items[mi].measurement, sys.spectrum,
                                    &pb.outcome_ranges[mi],
                                    static_cast<int>(mi));
          quads.insert(quads.end(), qs.begin(), qs.end());
        }
      }

      ResultRecord rec;
      rec.state_label = cfg.states[si].label;
      rec.set_label = cfg.measurement_sets[gi].label;
      rec.bound_lower = pb.lower;
      rec.bound_upper = pb.upper;

      json jmoments = json::array();
      for (int k : cfg.moments) {
        MomentRecord mr;
        mr.moment = k;
        VectorXd v(values.size());
        for (int l = 0; l < values.size(); ++l)
          v(l) = k == 1 ? values(l) : std::pow(values(l), k);
        mr.true_value = v.dot(p_true);
        mr.analytic = analytic_interval(pb, values, k);
        mr.analytic_quality =
            quality_factors(mr.analytic.lower, mr.analytic.upper, v);
        json jm{{"moment", k},
                {"true", mr.true_value},
                {"analytic", interval_json(mr.analytic)},
                {"quality_analytic", quality_json(mr.analytic_quality)}};
        if (cfg.estimator.enabled) {
          FeasibleSet fs{pb, quads};
          OptimizerSettings settings = cfg.estimator.settings;
          settings.seed = cfg.seeds.optimizer;
          const EstimateResult er =
              constrained_interval(fs, values, k, settings);
          mr.tight = er.tight;
          mr.tight_quality =
              quality_factors(er.tight.lower, er.tight.upper, v);
          jm["tight"] = interval_json(er.tight);
          jm["quality_tight"] = quality_json(*mr.tight_quality);
          jm["estimator"] = {
              {"iterations", er.diagnostics.total_iterations},
              {"accepted_runs", er.diagnostics.accepted_runs},
              {"worst_residual", er.diagnostics.worst_residual},
              {"clamped", er.diagnostics.clamped},
              {"degraded", er.diagnostics.degraded}};
        }
        jmoments.push_back(std::move(jm));
        rec.moments.push_back(std::move(mr));
      }

      const std::string table_name =
          sanitize(cfg.output_label) + "_" + sanitize(rec.state_label) + "_" +
          sanitize(rec.set_label) + "_bounds.tsv";
      const std::string table_path =
          (std::filesystem::path(output_dir) / table_name).string();
      write_bounds_table(table_path, values, pb.lower, pb.upper);
      out.written_files.push_back(table_path);

      summary["results"].push_back(json{{"state", rec.state_label},
                                        {"set", rec.set_label},
                                        {"moments", jmoments},
                                        {"bounds_file", table_name}});
      out.records.push_back(std::move(rec));
    }
  }

  const std::string summary_path =
      (std::filesystem::path(output_dir) /
       (sanitize(cfg.output_label) + "_summary.json"))
          .string();
  std::ofstream sf(summary_path);
  require(static_cast<bool>(sf), "cannot open output file " + summary_path);
  sf << summary.dump(2) << "\n";
  sf.close();
  out.written_files.push_back(summary_path);
  return out;
}

}  // namespace obsbound
