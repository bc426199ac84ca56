#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "obsbound/experiment.hpp"

namespace {

void apply_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) {
    omp_set_num_threads(threads);
  } else if (const char* env = std::getenv("OBSBOUND_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#else
  (void)threads;
#endif
}

int apply_seed_overrides(obsbound::ExperimentConfig& cfg,
                         const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      std::cerr << "bad --seed-override \"" << ov << "\" (want name=int)\n";
      return 1;
    }
    const std::string name = ov.substr(0, eq);
    const std::uint64_t value = std::strtoull(ov.c_str() + eq + 1, nullptr, 10);
    if (name == "disorder")
      cfg.seeds.disorder = value;
    else if (name == "haar")
      cfg.seeds.haar = value;
    else if (name == "optimizer")
      cfg.seeds.optimizer = value;
    else {
      std::cerr << "unknown seed name \"" << name
                << "\" (expected disorder, haar or optimizer)\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outcome-statistics bounds on unmeasured observables"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir = ".";
  int threads = 0;
  std::vector<std::string> seed_overrides;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config file (JSON)")->required();
  run->add_option("--output-dir", output_dir, "directory for result files");
  run->add_option("--threads", threads, "worker thread count");
  run->add_option("--seed-override", seed_overrides,
                  "override a seed, e.g. disorder=7");

  CLI::App* validate = app.add_subcommand("validate", "check a config");
  validate->add_option("config", config_path, "config file (JSON)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  obsbound::ExperimentConfig cfg;
  try {
    cfg = obsbound::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  if (validate->parsed()) {
    const auto errors = obsbound::validate_config(cfg);
    if (errors.empty()) {
      std::cout << "ok\n";
      return 0;
    }
    for (const std::string& e : errors) std::cout << e << "\n";
    return 1;
  }

  if (const int rc = apply_seed_overrides(cfg, seed_overrides); rc != 0)
    return rc;
  {
    const auto errors = obsbound::validate_config(cfg);
    if (!errors.empty()) {
      for (const std::string& e : errors) std::cerr << e << "\n";
      return 1;
    }
  }
  apply_thread_count(threads);

  try {
    const obsbound::RunOutput out = obsbound::run_experiment(cfg, output_dir);
    for (const std::string& f : out.written_files) std::cout << f << "\n";
  } catch (const obsbound::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
