#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "obsbound/experiment.hpp"

using namespace obsbound;

namespace {

std::string minimal_config(const std::string& extra = "") {
  return R"({
    "system": {"kind": "heisenberg", "length": 4, "disorder_strength": 1.0,
               "sector": {"kind": "spin-z", "particles": 2}},
    "states": [{"kind": "ground"}],
    "measurements": [{"method": "computational"}],
    "time": {"total": 2.0, "points": 5},
    "output": "mini")" +
         extra + "\n}";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string config_dir() {
#ifdef OBSBOUND_CONFIG_DIR
  return OBSBOUND_CONFIG_DIR;
#else
  return "configs";
#endif
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const ExperimentConfig cfg = parse_config(minimal_config());
  CHECK(cfg.system.model.kind == ModelKind::Heisenberg);
  CHECK(cfg.system.model.length == 4);
  CHECK(cfg.states.size() == 1);
  CHECK(cfg.measurement_sets.size() == 1);
  CHECK(cfg.time.points == 5);
  CHECK(cfg.moments == std::vector<int>{1});
  CHECK(cfg.seeds.disorder == 1);
  CHECK_FALSE(cfg.estimator.enabled);
  CHECK(validate_config(cfg).empty());
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(parse_config(minimal_config(R"(, "typo": 1)")),
                       doctest::Contains("typo"), InvalidInput);
  std::string bad = minimal_config();
  bad.replace(bad.find("\"total\""), 7, "\"ttoal\"");
  CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("ttoal"),
                       InvalidInput);
}

TEST_CASE("malformed JSON is reported as a config error") {
  CHECK_THROWS_AS(parse_config("{ not json"), InvalidInput);
}

TEST_CASE("validation flags k not dividing L") {
  std::string text = minimal_config();
  const std::string plain = R"({"method": "computational"})";
  text.replace(text.find(plain), plain.size(),
               R"({"method": "gs-opt", "k": 3})");
  const ExperimentConfig cfg = parse_config(text);
  const auto errors = validate_config(cfg);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("k = 3") != std::string::npos);
  CHECK(errors[0].find("L = 4") != std::string::npos);
}

TEST_CASE("validation flags incompatible sectors") {
  std::string text = minimal_config();
  text.replace(text.find("heisenberg"), 10, "ising");
  ExperimentConfig cfg = parse_config(text);
  cfg.system.model.alpha = 1.13;
  const auto errors = validate_config(cfg);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("incompatible sector") != std::string::npos);
}

TEST_CASE("all bundled configs parse and validate cleanly") {
  int checked = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(config_dir())) {
    if (entry.path().extension() != ".json") continue;
    const ExperimentConfig cfg = load_config(entry.path().string());
    const auto errors = validate_config(cfg);
    for (const std::string& e : errors) {
      INFO(entry.path().string(), ": ", e);
      CHECK(false);
    }
    ++checked;
  }
  CHECK(checked == 12);
}

TEST_CASE("time grids cover closed and half-open intervals") {
  TimeGridConfig closed{10.0, 5, true};
  const auto g1 = closed.grid();
  CHECK(g1.front() == 0.0);
  CHECK(g1.back() == doctest::Approx(10.0));
  TimeGridConfig open{10.0, 5, false};
  const auto g2 = open.grid();
  CHECK(g2.back() == doctest::Approx(8.0));
  TimeGridConfig single{10.0, 1, true};
  CHECK(single.grid() == std::vector<double>{0.0});
}

TEST_CASE("running the coarse-measurement example writes expected files") {
  const ExperimentConfig cfg =
      load_config(config_dir() + "/appendix_b.json");
  const std::string dir = "test_out_appb";
  std::filesystem::remove_all(dir);
  const RunOutput out = run_experiment(cfg, dir);
  REQUIRE(out.records.size() == 1);
  const ResultRecord& rec = out.records[0];
  REQUIRE(rec.moments.size() == 1);
  CHECK(rec.moments[0].true_value == doctest::Approx(2.5));
  CHECK(rec.moments[0].analytic.lower == doctest::Approx(2.25).epsilon(1e-9));
  CHECK(rec.moments[0].analytic.upper == doctest::Approx(3.5).epsilon(1e-9));
  REQUIRE(rec.moments[0].tight.has_value());
  CHECK(rec.moments[0].tight->lower == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(rec.moments[0].tight->upper == doctest::Approx(3.1).epsilon(1e-3));
  // Summary and one bounds table on disk.
  CHECK(out.written_files.size() == 2);
  const std::string summary = slurp(dir + "/appendix_b_summary.json");
  CHECK(summary.find("\"version\"") != std::string::npos);
  CHECK(summary.find("2.25") != std::string::npos);
  const std::string table = slurp(out.written_files[0]);
  CHECK(table.find("# index\teigenvalue\tlower\tupper") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the qubit example identifies the energy perfectly") {
  // |+> measured in the x basis: one certain outcome pins the whole
  // distribution, so the interval collapses and all of the range is
  // excluded.
  const ExperimentConfig cfg =
      load_config(config_dir() + "/qubit_appendix_d.json");
  const std::string dir = "test_out_qubit";
  std::filesystem::remove_all(dir);
  const RunOutput out = run_experiment(cfg, dir);
  REQUIRE(out.records.size() == 1);
  const MomentRecord& mr = out.records[0].moments[0];
  CHECK(mr.true_value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mr.analytic_quality.range_excluded_pct ==
        doctest::Approx(100.0).epsilon(1e-10));
  CHECK(mr.analytic.lower <= mr.true_value + 1e-10);
  CHECK(mr.analytic.upper >= mr.true_value - 1e-10);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reruns are byte-identical") {
  const ExperimentConfig cfg =
      load_config(config_dir() + "/appendix_b.json");
  std::filesystem::remove_all("test_out_det1");
  std::filesystem::remove_all("test_out_det2");
  const RunOutput a = run_experiment(cfg, "test_out_det1");
  const RunOutput b = run_experiment(cfg, "test_out_det2");
  REQUIRE(a.written_files.size() == b.written_files.size());
  for (std::size_t i = 0; i < a.written_files.size(); ++i) {
    CHECK(slurp(a.written_files[i]) == slurp(b.written_files[i]));
  }
  std::filesystem::remove_all("test_out_det1");
  std::filesystem::remove_all("test_out_det2");
}

TEST_CASE("invalid configs abort the run with a field-level message") {
  ExperimentConfig cfg = parse_config(minimal_config());
  cfg.measurement_sets[0].specs[0].method =
      MeasurementConfig::Method::Coarse;  // delta_e missing
  CHECK_THROWS_WITH_AS(run_experiment(cfg, "test_out_invalid"),
                       doctest::Contains("delta_e"), InvalidInput);
}
