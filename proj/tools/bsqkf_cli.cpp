#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "bsq/errors.hpp"
#include "bsq/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sigma-point and Bayes-Sard moment-transform benchmark runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  int jobs = default_jobs();
  auto* run = app.add_subcommand("run", "Run the experiment described by a config");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed_override, "Override the config's master seed");
  run->add_option("--jobs", jobs, "Worker threads for Monte Carlo runs");

  auto* describe = app.add_subcommand(
      "describe-config", "Print the config schema with all defaults");

  std::optional<double> tol;
  auto* weights = app.add_subcommand(
      "weights-check", "Verify Bayes-Sard recovery of classical weights");
  weights->add_option("--tol", tol, "Override both sweep tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; genuine usage errors are config errors.
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (describe->parsed()) {
      std::cout << bsq::describe_config();
      return kExitOk;
    }
    if (weights->parsed()) {
      const int failures = bsq::weights_check_report(std::cout, tol);
      return failures == 0 ? kExitOk : kExitNumerical;
    }
    bsq::ExperimentConfig config = bsq::load_config(config_path);
    if (seed_override) config.seed = *seed_override;
    bsq::run_experiment(config, out_dir, jobs);
    return kExitOk;
  } catch (const bsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
