#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bsq {

/// One moment-transform entry of an experiment configuration.
struct TransformConfig {
  std::string name;              // row label in result tables
  std::string method;            // "classical" | "bsq" | "bsq-emv"
  std::string points;            // "ut" | "sr" | "gh"
  double kappa = 0.0;            // ut scaling
  int order = 0;                 // gh order p
  double scale = 1.0;            // rbf scale (bsq)
  Eigen::VectorXd lengthscales;  // rbf lengthscales (bsq); size 1 broadcasts
  Eigen::VectorXd emv_dynamics;     // bsq-emv: per-output or broadcast
  Eigen::VectorXd emv_measurement;  // bsq-emv
};

/// Polar->Cartesian study grid: input means on a spiral, angular noise sweep.
struct PolarConfig {
  int positions = 10;
  int sigmas = 10;
  double radius_start = 2.0;      // m
  double radius_step = 1.0;       // m
  double angle_start = 0.0;       // rad
  double angle_step = 0.7;        // rad
  double sigma_r = 0.5;           // m
  double sigma_theta_min_deg = 6.0;
  double sigma_theta_max_deg = 36.0;
  int mc_samples = 10000;
};

struct ExperimentConfig {
  std::string scenario;  // "polar" | "ungm" | "reentry" | "weights-check"
  std::uint64_t seed = 0;
  int mc_runs = 100;
  int horizon = 500;                          // ungm steps
  bool measurement_uses_previous_state = false;  // ungm truth-generator variant
  int bootstrap_resamples = 10000;
  std::optional<double> weights_tol;          // weights-check override
  PolarConfig polar;
  std::vector<TransformConfig> transforms;
};

/// Benchmark defaults for each scenario, with the kernel/EMV settings the
/// bundled configs use.
ExperimentConfig default_config(const std::string& scenario);

/// Parses a JSON config file. Throws ConfigError on malformed input.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Human-readable schema of the config file with all defaults.
std::string describe_config();

/// One per-run score value.
struct ScoreRow {
  int run_id = 0;
  std::string transform;
  std::string score;
  double value = 0.0;
};

/// One summary cell: mean with two bootstrap standard deviations.
struct SummaryRow {
  std::string transform;
  std::string score;
  double mean = 0.0;
  double spread2 = 0.0;
};

struct ScenarioResults {
  std::vector<ScoreRow> rows;
  std::vector<SummaryRow> summary;
  std::map<std::string, std::string> plotdata;  // relative filename -> csv text
  int regularized = 0;                          // INC jitter repairs, if any
};

/// Runs the configured scenario in-process; `jobs` bounds the worker pool.
/// Results are independent of `jobs` and deterministic per (config, seed).
ScenarioResults run_scenario(const ExperimentConfig& config, int jobs = 1);

/// Runs the scenario and writes results.csv, summary.json and plotdata/*.csv
/// under out_dir (created if missing).
void run_experiment(const ExperimentConfig& config,
                    const std::filesystem::path& out_dir, int jobs = 1);

/// One row of the classical-weight recovery sweep.
struct WeightsCheckRow {
  std::string family;  // "ut" | "gh"
  int dim = 0;
  double param = 0.0;  // kappa or order
  double max_abs_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Sweeps Bayes-Sard mean weights against the classical UT and Gauss-Hermite
/// weights. `tol` overrides both per-family defaults (1e-12 UT, 1e-9 GH).
std::vector<WeightsCheckRow> weights_check(std::optional<double> tol = {});

/// Prints one line per sweep row plus a summary; returns the failure count.
int weights_check_report(std::ostream& os, std::optional<double> tol = {});

}  // namespace bsq
