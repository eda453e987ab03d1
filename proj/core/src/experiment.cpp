#include "bsq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "bsq/errors.hpp"
#include "bsq/filtering.hpp"
#include "bsq/kernels.hpp"
#include "bsq/metrics.hpp"
#include "bsq/models.hpp"
#include "bsq/rng.hpp"
#include "bsq/transforms.hpp"

namespace bsq {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

// Stream-id ranges carved out of the master seed; run/cell/bootstrap indices
// stay far below the range width, so streams never collide.
constexpr std::uint64_t kRunStreamBase = 1000003;
constexpr std::uint64_t kCellStreamBase = 2000003;
constexpr std::uint64_t kBootstrapStreamBase = 3000003;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(jobs, count);
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Configuration

Eigen::VectorXd json_to_vector(const json& j, const char* what) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (j.is_array()) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& e : j) {
      if (!e.is_number())
        throw ConfigError(std::string(what) + ": expected numbers");
      v(i++) = e.get<double>();
    }
    if (v.size() == 0) throw ConfigError(std::string(what) + ": empty array");
    return v;
  }
  throw ConfigError(std::string(what) + ": expected a number or array");
}

TransformConfig parse_transform(const json& j) {
  if (!j.is_object()) throw ConfigError("transforms: entries must be objects");
  TransformConfig tc;
  if (!j.contains("name") || !j.at("name").is_string())
    throw ConfigError("transforms: every entry needs a string \"name\"");
  tc.name = j.at("name").get<std::string>();
  tc.method = j.value("method", std::string("classical"));
  tc.points = j.value("points", std::string("ut"));
  tc.kappa = j.value("kappa", 0.0);
  tc.order = j.value("order", 5);
  tc.scale = j.value("scale", 1.0);
  if (j.contains("lengthscales"))
    tc.lengthscales = json_to_vector(j.at("lengthscales"), "lengthscales");
  else if (j.contains("lengthscale"))
    tc.lengthscales = json_to_vector(j.at("lengthscale"), "lengthscale");
  else
    tc.lengthscales = Eigen::VectorXd::Constant(1, 1.0);
  if (j.contains("emv_dynamics"))
    tc.emv_dynamics = json_to_vector(j.at("emv_dynamics"), "emv_dynamics");
  if (j.contains("emv_measurement"))
    tc.emv_measurement =
        json_to_vector(j.at("emv_measurement"), "emv_measurement");

  if (tc.method != "classical" && tc.method != "bsq" && tc.method != "bsq-emv")
    throw ConfigError("transforms: unknown method \"" + tc.method +
                      "\" (expected classical | bsq | bsq-emv)");
  if (tc.points != "ut" && tc.points != "sr" && tc.points != "gh")
    throw ConfigError("transforms: unknown points \"" + tc.points +
                      "\" (expected ut | sr | gh)");
  if (tc.method != "classical" && tc.points == "sr")
    throw ConfigError("transforms: Bayes-Sard methods need a square basis; "
                      "use ut or gh points");
  if (tc.points == "gh" && tc.order < 1)
    throw ConfigError("transforms: gh order must be >= 1");
  if (tc.method == "bsq-emv") {
    if (tc.emv_dynamics.size() == 0)
      tc.emv_dynamics = Eigen::VectorXd::Zero(1);
    if (tc.emv_measurement.size() == 0)
      tc.emv_measurement = Eigen::VectorXd::Zero(1);
    if (!(tc.emv_dynamics.array() >= 0.0).all() ||
        !(tc.emv_measurement.array() >= 0.0).all())
      throw ConfigError("transforms: emv entries must be >= 0");
  }
  return tc;
}

TransformConfig make_transform(std::string name, std::string method,
                               std::string points, double kappa, int order,
                               double scale, Eigen::VectorXd lengthscales,
                               Eigen::VectorXd emv_dynamics = {},
                               Eigen::VectorXd emv_measurement = {}) {
  TransformConfig tc;
  tc.name = std::move(name);
  tc.method = std::move(method);
  tc.points = std::move(points);
  tc.kappa = kappa;
  tc.order = order;
  tc.scale = scale;
  tc.lengthscales = std::move(lengthscales);
  tc.emv_dynamics = std::move(emv_dynamics);
  tc.emv_measurement = std::move(emv_measurement);
  return tc;
}

Eigen::VectorXd scalar_vec(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

ExperimentConfig default_config(const std::string& scenario) {
  ExperimentConfig config;
  config.scenario = scenario;
  if (scenario == "polar") {
    config.seed = 2001;
    config.transforms = {
        make_transform("ut", "classical", "ut", 2.0, 0, 1.0, scalar_vec(1.0)),
        make_transform("bsq-ut", "bsq", "ut", 2.0, 0, 1.0,
                       (Eigen::VectorXd(2) << 60.0, 6.0).finished()),
    };
  } else if (scenario == "ungm") {
    config.seed = 2002;
    config.mc_runs = 100;
    config.horizon = 500;
    config.transforms = {
        make_transform("ukf", "classical", "ut", 2.0, 0, 1.0, scalar_vec(1.0)),
        make_transform("bsq-ut", "bsq", "ut", 2.0, 0, 3.0, scalar_vec(0.3)),
        make_transform("ghkf-5", "classical", "gh", 0.0, 5, 1.0, scalar_vec(1.0)),
        make_transform("bsq-gh-5", "bsq", "gh", 0.0, 5, 5.0, scalar_vec(0.6)),
        make_transform("ghkf-7", "classical", "gh", 0.0, 7, 1.0, scalar_vec(1.0)),
        make_transform("bsq-gh-7", "bsq", "gh", 0.0, 7, 3.0, scalar_vec(0.4)),
    };
  } else if (scenario == "reentry") {
    config.seed = 2003;
    config.mc_runs = 100;
    config.transforms = {
        make_transform("bsqkf", "bsq-emv", "ut", 0.0, 0, 1.0, scalar_vec(1.0),
                       scalar_vec(2e-4), scalar_vec(0.0)),
        make_transform("ukf", "classical", "ut", 0.0, 0, 1.0, scalar_vec(1.0)),
    };
  } else if (scenario == "weights-check") {
    config.seed = 0;
  } else {
    throw ConfigError("unknown scenario \"" + scenario +
                      "\" (expected polar | ungm | reentry | weights-check)");
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("scenario") || !j.at("scenario").is_string())
    throw ConfigError("config must be an object with a string \"scenario\"");

  ExperimentConfig config = default_config(j.at("scenario").get<std::string>());
  try {
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mc_runs")) config.mc_runs = j.at("mc_runs").get<int>();
    if (j.contains("horizon")) config.horizon = j.at("horizon").get<int>();
    if (j.contains("measurement_uses_previous_state"))
      config.measurement_uses_previous_state =
          j.at("measurement_uses_previous_state").get<bool>();
    if (j.contains("bootstrap_resamples"))
      config.bootstrap_resamples = j.at("bootstrap_resamples").get<int>();
    if (j.contains("weights_tol"))
      config.weights_tol = j.at("weights_tol").get<double>();
    if (j.contains("polar")) {
      const json& p = j.at("polar");
      PolarConfig& pc = config.polar;
      pc.positions = p.value("positions", pc.positions);
      pc.sigmas = p.value("sigmas", pc.sigmas);
      pc.radius_start = p.value("radius_start", pc.radius_start);
      pc.radius_step = p.value("radius_step", pc.radius_step);
      pc.angle_start = p.value("angle_start", pc.angle_start);
      pc.angle_step = p.value("angle_step", pc.angle_step);
      pc.sigma_r = p.value("sigma_r", pc.sigma_r);
      pc.sigma_theta_min_deg = p.value("sigma_theta_min_deg", pc.sigma_theta_min_deg);
      pc.sigma_theta_max_deg = p.value("sigma_theta_max_deg", pc.sigma_theta_max_deg);
      pc.mc_samples = p.value("mc_samples", pc.mc_samples);
    }
    if (j.contains("transforms")) {
      if (!j.at("transforms").is_array())
        throw ConfigError("transforms must be an array");
      config.transforms.clear();
      for (const auto& t : j.at("transforms"))
        config.transforms.push_back(parse_transform(t));
    }
  } catch (const json::exception& e) {
    throw ConfigError("invalid config value in " + path.string() + ": " +
                      e.what());
  }

  if (config.mc_runs < 1) throw ConfigError("mc_runs must be >= 1");
  if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (config.polar.positions < 1 || config.polar.sigmas < 1 ||
      config.polar.mc_samples < 10)
    throw ConfigError("polar grid sizes must be positive");
  if (config.scenario != "weights-check" && config.transforms.empty())
    throw ConfigError("at least one transform is required");
  return config;
}

namespace {

// ---------------------------------------------------------------------------
// Transform construction

UnitSigmaPointSet make_points(const TransformConfig& tc, int dim) {
  if (tc.points == "ut") return ut_points(dim, tc.kappa);
  if (tc.points == "sr") return spherical_radial_points(dim);
  return gh_points(dim, tc.order);
}

MultiIndexBasis make_basis(const TransformConfig& tc, int dim) {
  if (tc.points == "ut") return ut_basis(dim);
  return gh_max_degree_basis(dim, tc.order);
}

RbfParams make_kernel(const TransformConfig& tc, int dim) {
  RbfParams params;
  params.scale = tc.scale;
  if (tc.lengthscales.size() == 1)
    params.lengthscales = Eigen::VectorXd::Constant(dim, tc.lengthscales(0));
  else if (tc.lengthscales.size() == dim)
    params.lengthscales = tc.lengthscales;
  else
    throw ConfigError("transform \"" + tc.name + "\": lengthscales must have 1 or " +
                      std::to_string(dim) + " entries");
  return params;
}

void check_emv_size(const Eigen::VectorXd& emv, int out_dim,
                    const std::string& name, const char* what) {
  if (emv.size() != 1 && emv.size() != out_dim)
    throw ConfigError("transform \"" + name + "\": " + what + " must have 1 or " +
                      std::to_string(out_dim) + " entries");
}

/// Dynamics- and measurement-side weights for one filter configuration.
struct FilterTransforms {
  TransformWeights dynamics;
  TransformWeights measurement;
};

FilterTransforms build_filter_transforms(const TransformConfig& tc, int state_dim,
                                         int meas_dim) {
  FilterTransforms out;
  const UnitSigmaPointSet points = make_points(tc, state_dim);
  if (tc.method == "classical") {
    out.dynamics = classical_weights(points);
    out.measurement = out.dynamics;
  } else if (tc.method == "bsq") {
    const TransformWeights w =
        bsq_weights(points, make_basis(tc, state_dim), make_kernel(tc, state_dim));
    out.dynamics = w;
    out.measurement = w;
  } else {
    check_emv_size(tc.emv_dynamics, state_dim, tc.name, "emv_dynamics");
    check_emv_size(tc.emv_measurement, meas_dim, tc.name, "emv_measurement");
    const MultiIndexBasis basis = make_basis(tc, state_dim);
    out.dynamics = bsq_weights_agnostic(points, basis, tc.emv_dynamics);
    out.measurement = bsq_weights_agnostic(points, basis, tc.emv_measurement);
  }
  return out;
}

/// Single moment transform over a dim-dimensional input (polar study).
TransformWeights build_single_transform(const TransformConfig& tc, int dim,
                                        int out_dim) {
  const UnitSigmaPointSet points = make_points(tc, dim);
  if (tc.method == "classical") return classical_weights(points);
  if (tc.method == "bsq")
    return bsq_weights(points, make_basis(tc, dim), make_kernel(tc, dim));
  check_emv_size(tc.emv_dynamics, out_dim, tc.name, "emv_dynamics");
  return bsq_weights_agnostic(points, make_basis(tc, dim), tc.emv_dynamics);
}

// ---------------------------------------------------------------------------
// Summaries

void append_summary(ScenarioResults& results, const ExperimentConfig& config,
                    const std::string& transform, const std::string& score,
                    const std::vector<double>& per_run, std::uint64_t stream) {
  double sum = 0.0;
  for (double v : per_run) sum += v;
  SummaryRow row;
  row.transform = transform;
  row.score = score;
  row.mean = sum / static_cast<double>(per_run.size());
  row.spread2 =
      per_run.size() > 1
          ? bootstrap_spread(per_run, config.bootstrap_resamples,
                             mix_seed(config.seed, kBootstrapStreamBase + stream))
          : 0.0;
  results.summary.push_back(std::move(row));
}

// Quadratic form with the same jitter repair policy as the INC metric.
double quad_form_jittered(const Eigen::MatrixXd& m, const Eigen::VectorXd& e) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd repaired = m;
    repaired.diagonal().array() += 1e-12 * m.trace();
    llt.compute(repaired);
    if (llt.info() != Eigen::Success)
      throw NumericalError("plot data: covariance is singular");
  }
  return e.dot(llt.solve(e));
}

// ---------------------------------------------------------------------------
// Polar -> Cartesian study

ScenarioResults run_polar(const ExperimentConfig& config, int jobs) {
  const PolarConfig& pc = config.polar;
  const int cells = pc.positions * pc.sigmas;
  const auto n_transforms = config.transforms.size();

  std::vector<TransformWeights> weights;
  weights.reserve(n_transforms);
  for (const auto& tc : config.transforms)
    weights.push_back(build_single_transform(tc, 2, 2));

  const VectorFn to_cartesian = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(polar_to_cartesian(x.head<2>()));
  };

  // skl(cell, transform)
  Eigen::MatrixXd scores(cells, static_cast<Eigen::Index>(n_transforms));
  parallel_for(cells, jobs, [&](int cell) {
    const int i = cell / pc.sigmas;
    const int j = cell % pc.sigmas;
    Eigen::Vector2d mean(pc.radius_start + i * pc.radius_step,
                         pc.angle_start + i * pc.angle_step);
    const double sigma_theta =
        (pc.sigma_theta_min_deg +
         (pc.sigmas == 1 ? 0.0
                         : j * (pc.sigma_theta_max_deg - pc.sigma_theta_min_deg) /
                               (pc.sigmas - 1))) *
        kPi / 180.0;
    Eigen::Matrix2d cov = Eigen::Vector2d(pc.sigma_r * pc.sigma_r,
                                          sigma_theta * sigma_theta)
                              .asDiagonal();

    // Monte Carlo ground truth, shared by every transform in this cell.
    GaussRng rng(mix_seed(config.seed, kCellStreamBase + static_cast<std::uint64_t>(cell)));
    const Eigen::Matrix2d root = cov.llt().matrixL();
    Eigen::Vector2d mc_mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d mc_sq = Eigen::Matrix2d::Zero();
    for (int s = 0; s < pc.mc_samples; ++s) {
      Eigen::Vector2d z(rng.normal(), rng.normal());
      const Eigen::Vector2d sample = polar_to_cartesian(mean + root * z);
      mc_mean += sample;
      mc_sq += sample * sample.transpose();
    }
    mc_mean /= pc.mc_samples;
    const Eigen::Matrix2d mc_cov =
        (mc_sq - pc.mc_samples * mc_mean * mc_mean.transpose()) /
        (pc.mc_samples - 1);

    for (std::size_t t = 0; t < n_transforms; ++t) {
      const GaussianMoments approx =
          apply_transform(weights[t], to_cartesian, mean, cov);
      scores(cell, static_cast<Eigen::Index>(t)) =
          skl(approx.mean, approx.cov, mc_mean, mc_cov);
    }
  });

  ScenarioResults results;
  for (int cell = 0; cell < cells; ++cell)
    for (std::size_t t = 0; t < n_transforms; ++t)
      results.rows.push_back({cell, config.transforms[t].name, "skl",
                              scores(cell, static_cast<Eigen::Index>(t))});
  for (std::size_t t = 0; t < n_transforms; ++t) {
    std::vector<double> col(scores.col(static_cast<Eigen::Index>(t)).data(),
                            scores.col(static_cast<Eigen::Index>(t)).data() + cells);
    append_summary(results, config, config.transforms[t].name, "skl", col, t);
  }

  // Fig-style marginals: SKL averaged over the noise sweep per position and
  // averaged over positions per noise level.
  std::ostringstream grid, by_pos, by_sigma;
  grid << "cell,position,sigma_index,radius_m,angle_rad,sigma_theta_deg";
  by_pos << "position,radius_m,angle_rad";
  by_sigma << "sigma_index,sigma_theta_deg";
  for (const auto& tc : config.transforms) {
    grid << ",skl_" << tc.name;
    by_pos << ",skl_" << tc.name;
    by_sigma << ",skl_" << tc.name;
  }
  grid << '\n';
  by_pos << '\n';
  by_sigma << '\n';
  auto sigma_deg = [&](int j) {
    return pc.sigma_theta_min_deg +
           (pc.sigmas == 1 ? 0.0
                           : j * (pc.sigma_theta_max_deg - pc.sigma_theta_min_deg) /
                                 (pc.sigmas - 1));
  };
  for (int cell = 0; cell < cells; ++cell) {
    const int i = cell / pc.sigmas;
    const int j = cell % pc.sigmas;
    grid << cell << ',' << i << ',' << j << ','
         << fmt(pc.radius_start + i * pc.radius_step) << ','
         << fmt(pc.angle_start + i * pc.angle_step) << ',' << fmt(sigma_deg(j));
    for (std::size_t t = 0; t < n_transforms; ++t)
      grid << ',' << fmt(scores(cell, static_cast<Eigen::Index>(t)));
    grid << '\n';
  }
  for (int i = 0; i < pc.positions; ++i) {
    by_pos << i << ',' << fmt(pc.radius_start + i * pc.radius_step) << ','
           << fmt(pc.angle_start + i * pc.angle_step);
    for (std::size_t t = 0; t < n_transforms; ++t) {
      double mean = 0.0;
      for (int j = 0; j < pc.sigmas; ++j)
        mean += scores(i * pc.sigmas + j, static_cast<Eigen::Index>(t));
      by_pos << ',' << fmt(mean / pc.sigmas);
    }
    by_pos << '\n';
  }
  for (int j = 0; j < pc.sigmas; ++j) {
    by_sigma << j << ',' << fmt(sigma_deg(j));
    for (std::size_t t = 0; t < n_transforms; ++t) {
      double mean = 0.0;
      for (int i = 0; i < pc.positions; ++i)
        mean += scores(i * pc.sigmas + j, static_cast<Eigen::Index>(t));
      by_sigma << ',' << fmt(mean / pc.positions);
    }
    by_sigma << '\n';
  }
  results.plotdata["skl_grid.csv"] = grid.str();
  results.plotdata["skl_by_position.csv"] = by_pos.str();
  results.plotdata["skl_by_sigma.csv"] = by_sigma.str();
  return results;
}

// ---------------------------------------------------------------------------
// Filtering benchmarks (UNGM and reentry)

struct RunRecord {
  std::vector<Eigen::VectorXd> truth;      // x_k
  std::vector<Eigen::VectorXd> estimates;  // m_{k|k}
  std::vector<Eigen::MatrixXd> covs;       // P_{k|k}
};

// UNGM truth with the measurement generated from the previous state; the
// filter still assumes h(x_k), so this variant deliberately misspecifies it.
Trajectory simulate_ungm_lagged(const StateSpaceModel& model, int horizon,
                                std::uint64_t seed) {
  GaussRng init_rng(mix_seed(seed, 0));
  GaussRng process_rng(mix_seed(seed, 1));
  GaussRng meas_rng(mix_seed(seed, 2));
  const double q_std = std::sqrt(model.process_noise(0, 0));
  const double r_std = std::sqrt(model.meas_noise(0, 0));
  const double p0_std = std::sqrt(model.init.cov(0, 0));

  Trajectory traj;
  traj.states.reserve(horizon);
  traj.measurements.reserve(horizon);
  Eigen::VectorXd x = model.init.mean;
  x(0) += p0_std * init_rng.normal();
  for (int k = 1; k <= horizon; ++k) {
    Eigen::VectorXd y = model.measurement(x, k);
    y(0) += r_std * meas_rng.normal();
    x = model.dynamics(x, k);
    x(0) += q_std * process_rng.normal();
    traj.states.push_back(x);
    traj.measurements.push_back(y);
  }
  return traj;
}

ScenarioResults run_ungm(const ExperimentConfig& config, int jobs) {
  const StateSpaceModel model = ungm_model();
  const auto n_transforms = config.transforms.size();

  std::vector<FilterTransforms> transforms;
  transforms.reserve(n_transforms);
  for (const auto& tc : config.transforms)
    transforms.push_back(
        build_filter_transforms(tc, model.state_dim, model.meas_dim));

  // records[t][r]
  std::vector<std::vector<RunRecord>> records(
      n_transforms, std::vector<RunRecord>(static_cast<std::size_t>(config.mc_runs)));
  parallel_for(config.mc_runs, jobs, [&](int r) {
    const std::uint64_t run_seed =
        mix_seed(config.seed, kRunStreamBase + static_cast<std::uint64_t>(r));
    const Trajectory truth =
        config.measurement_uses_previous_state
            ? simulate_ungm_lagged(model, config.horizon, run_seed)
            : simulate_trajectory(model, config.horizon, run_seed);
    for (std::size_t t = 0; t < n_transforms; ++t) {
      try {
        const auto steps = run_filter(model, transforms[t].dynamics,
                                      transforms[t].measurement,
                                      truth.measurements);
        RunRecord& rec = records[t][static_cast<std::size_t>(r)];
        rec.truth = truth.states;
        rec.estimates.reserve(steps.size());
        rec.covs.reserve(steps.size());
        for (const auto& s : steps) {
          rec.estimates.push_back(s.posterior.mean);
          rec.covs.push_back(s.posterior.cov);
        }
      } catch (const Error& e) {
        throw NumericalError("transform \"" + config.transforms[t].name +
                             "\", run " + std::to_string(r) + ": " + e.what());
      }
    }
  });

  ScenarioResults results;
  std::uint64_t stream = 0;
  for (std::size_t t = 0; t < n_transforms; ++t) {
    std::vector<double> rmse_runs(static_cast<std::size_t>(config.mc_runs));
    std::vector<std::vector<Eigen::VectorXd>> truth_runs, est_runs;
    std::vector<std::vector<Eigen::MatrixXd>> cov_runs;
    for (int r = 0; r < config.mc_runs; ++r) {
      RunRecord& rec = records[t][static_cast<std::size_t>(r)];
      rmse_runs[static_cast<std::size_t>(r)] = rmse(rec.truth, rec.estimates);
      truth_runs.push_back(std::move(rec.truth));
      est_runs.push_back(std::move(rec.estimates));
      cov_runs.push_back(std::move(rec.covs));
    }
    const bool with_inc = config.mc_runs >= 2;
    std::vector<double> inc_runs;
    if (with_inc)
      inc_runs = inc_per_run(truth_runs, est_runs, cov_runs, {},
                             &results.regularized);
    for (int r = 0; r < config.mc_runs; ++r) {
      results.rows.push_back({r, config.transforms[t].name, "rmse",
                              rmse_runs[static_cast<std::size_t>(r)]});
      if (with_inc)
        results.rows.push_back({r, config.transforms[t].name, "inc",
                                inc_runs[static_cast<std::size_t>(r)]});
    }
    append_summary(results, config, config.transforms[t].name, "rmse", rmse_runs,
                   stream++);
    ++stream;
    if (with_inc)
      append_summary(results, config, config.transforms[t].name, "inc", inc_runs,
                     stream - 1);
  }
  return results;
}

ScenarioResults run_reentry(const ExperimentConfig& config, int jobs) {
  const StateSpaceModel model = reentry_filter_model();
  const auto n_transforms = config.transforms.size();

  std::vector<FilterTransforms> transforms;
  transforms.reserve(n_transforms);
  for (const auto& tc : config.transforms)
    transforms.push_back(
        build_filter_transforms(tc, model.state_dim, model.meas_dim));

  std::vector<std::vector<RunRecord>> records(
      n_transforms, std::vector<RunRecord>(static_cast<std::size_t>(config.mc_runs)));
  parallel_for(config.mc_runs, jobs, [&](int r) {
    const std::uint64_t run_seed =
        mix_seed(config.seed, kRunStreamBase + static_cast<std::uint64_t>(r));
    const Trajectory truth = reentry_truth_simulate(run_seed);
    for (std::size_t t = 0; t < n_transforms; ++t) {
      try {
        const auto steps = run_filter(model, transforms[t].dynamics,
                                      transforms[t].measurement,
                                      truth.measurements);
        RunRecord& rec = records[t][static_cast<std::size_t>(r)];
        rec.truth = truth.states;
        rec.estimates.reserve(steps.size());
        rec.covs.reserve(steps.size());
        for (const auto& s : steps) {
          rec.estimates.push_back(s.posterior.mean);
          rec.covs.push_back(s.posterior.cov);
        }
      } catch (const Error& e) {
        throw NumericalError("transform \"" + config.transforms[t].name +
                             "\", run " + std::to_string(r) + ": " + e.what());
      }
    }
  });

  const std::vector<std::pair<std::string, std::vector<int>>> blocks = {
      {"position", {0, 1}}, {"velocity", {2, 3}}, {"parameter", {4}}};

  ScenarioResults results;
  std::uint64_t stream = 0;
  for (std::size_t t = 0; t < n_transforms; ++t) {
    std::vector<std::vector<Eigen::VectorXd>> truth_runs, est_runs;
    std::vector<std::vector<Eigen::MatrixXd>> cov_runs;
    for (int r = 0; r < config.mc_runs; ++r) {
      RunRecord& rec = records[t][static_cast<std::size_t>(r)];
      truth_runs.push_back(std::move(rec.truth));
      est_runs.push_back(std::move(rec.estimates));
      cov_runs.push_back(std::move(rec.covs));
    }

    const std::size_t horizon = truth_runs.front().size();
    std::ostringstream series;
    series << "k,t_s";
    for (const auto& block : blocks)
      series << ",rmse_" << block.first << ",inc_" << block.first;
    series << '\n';
    std::vector<std::vector<double>> series_cols(2 * blocks.size(),
                                                 std::vector<double>(horizon));

    const bool with_inc = config.mc_runs >= 2;
    std::size_t block_idx = 0;
    for (const auto& [label, components] : blocks) {
      std::vector<double> rmse_runs(static_cast<std::size_t>(config.mc_runs));
      for (int r = 0; r < config.mc_runs; ++r)
        rmse_runs[static_cast<std::size_t>(r)] =
            rmse(truth_runs[static_cast<std::size_t>(r)],
                 est_runs[static_cast<std::size_t>(r)], components);
      std::vector<double> inc_runs;
      if (with_inc)
        inc_runs = inc_per_run(truth_runs, est_runs, cov_runs, components,
                               &results.regularized);

      for (int r = 0; r < config.mc_runs; ++r) {
        results.rows.push_back({r, config.transforms[t].name, "rmse_" + label,
                                rmse_runs[static_cast<std::size_t>(r)]});
        if (with_inc)
          results.rows.push_back({r, config.transforms[t].name, "inc_" + label,
                                  inc_runs[static_cast<std::size_t>(r)]});
      }
      append_summary(results, config, config.transforms[t].name, "rmse_" + label,
                     rmse_runs, stream++);
      ++stream;
      if (with_inc)
        append_summary(results, config, config.transforms[t].name, "inc_" + label,
                       inc_runs, stream - 1);

      // Time profiles: ensemble RMSE and mean log-ratio at each step.
      const auto dim = static_cast<Eigen::Index>(components.size());
      for (std::size_t k = 0; k < horizon; ++k) {
        Eigen::MatrixXd mse = Eigen::MatrixXd::Zero(dim, dim);
        std::vector<Eigen::VectorXd> errs(static_cast<std::size_t>(config.mc_runs));
        for (int r = 0; r < config.mc_runs; ++r) {
          Eigen::VectorXd e(dim);
          for (Eigen::Index i = 0; i < dim; ++i)
            e(i) = truth_runs[static_cast<std::size_t>(r)][k](
                       components[static_cast<std::size_t>(i)]) -
                   est_runs[static_cast<std::size_t>(r)][k](
                       components[static_cast<std::size_t>(i)]);
          errs[static_cast<std::size_t>(r)] = e;
          mse += e * e.transpose();
        }
        mse /= static_cast<double>(config.mc_runs);
        double inc_k = 0.0;
        if (config.mc_runs >= 2) {
          for (int r = 0; r < config.mc_runs; ++r) {
            Eigen::MatrixXd p(dim, dim);
            for (Eigen::Index i = 0; i < dim; ++i)
              for (Eigen::Index jj = 0; jj < dim; ++jj)
                p(i, jj) = cov_runs[static_cast<std::size_t>(r)][k](
                    components[static_cast<std::size_t>(i)],
                    components[static_cast<std::size_t>(jj)]);
            const Eigen::VectorXd& e = errs[static_cast<std::size_t>(r)];
            inc_k += 10.0 * std::log10(quad_form_jittered(p, e) /
                                       quad_form_jittered(mse, e));
          }
          inc_k /= static_cast<double>(config.mc_runs);
        }
        series_cols[2 * block_idx][k] = std::sqrt(mse.trace());
        series_cols[2 * block_idx + 1][k] = inc_k;
      }
      ++block_idx;
    }

    for (std::size_t k = 0; k < horizon; ++k) {
      series << (k + 1) << ',' << fmt((k + 1) * reentry::kFilterDt);
      for (std::size_t c = 0; c < series_cols.size(); ++c)
        series << ',' << fmt(series_cols[c][k]);
      series << '\n';
    }
    results.plotdata["timeseries_" + config.transforms[t].name + ".csv"] =
        series.str();
  }
  return results;
}

// ---------------------------------------------------------------------------

ScenarioResults run_weights_check(const ExperimentConfig& config) {
  ScenarioResults results;
  const auto rows = weights_check(config.weights_tol);
  int run_id = 0;
  int failures = 0;
  double worst_ut = 0.0;
  double worst_gh = 0.0;
  for (const auto& row : rows) {
    std::ostringstream label;
    label << row.family << "-d" << row.dim << '-'
          << (row.family == "ut" ? "k" : "p") << row.param;
    results.rows.push_back({run_id++, label.str(), "max_abs_err",
                            row.max_abs_err});
    failures += row.pass ? 0 : 1;
    if (row.family == "ut")
      worst_ut = std::max(worst_ut, row.max_abs_err);
    else
      worst_gh = std::max(worst_gh, row.max_abs_err);
  }
  results.summary.push_back({"ut", "worst_abs_err", worst_ut, 0.0});
  results.summary.push_back({"gh", "worst_abs_err", worst_gh, 0.0});
  results.summary.push_back({"all", "failures", static_cast<double>(failures), 0.0});
  return results;
}

}  // namespace

ScenarioResults run_scenario(const ExperimentConfig& config, int jobs) {
  if (config.scenario == "polar") return run_polar(config, jobs);
  if (config.scenario == "ungm") return run_ungm(config, jobs);
  if (config.scenario == "reentry") return run_reentry(config, jobs);
  if (config.scenario == "weights-check") return run_weights_check(config);
  throw ConfigError("unknown scenario \"" + config.scenario + "\"");
}

void run_experiment(const ExperimentConfig& config,
                    const std::filesystem::path& out_dir, int jobs) {
  const ScenarioResults results = run_scenario(config, jobs);

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "results.csv", std::ios::binary);
    if (!csv)
      throw Error("cannot write " + (out_dir / "results.csv").string());
    csv << "run_id,scenario,transform,score_name,value\n";
    for (const auto& row : results.rows)
      csv << row.run_id << ',' << config.scenario << ',' << row.transform << ','
          << row.score << ',' << fmt(row.value) << '\n';
  }
  {
    json summary;
    summary["scenario"] = config.scenario;
    summary["seed"] = config.seed;
    summary["mc_runs"] = config.mc_runs;
    summary["horizon"] = config.horizon;
    json rows = json::array();
    for (const auto& row : results.summary)
      rows.push_back({{"transform", row.transform},
                      {"score", row.score},
                      {"mean", row.mean},
                      {"spread2", row.spread2}});
    summary["results"] = rows;
    if (results.regularized > 0)
      summary["regularized_inc_solves"] = results.regularized;
    std::ofstream js(out_dir / "summary.json", std::ios::binary);
    if (!js)
      throw Error("cannot write " + (out_dir / "summary.json").string());
    js << summary.dump(2) << '\n';
  }
  if (!results.plotdata.empty()) {
    std::filesystem::create_directories(out_dir / "plotdata");
    for (const auto& [name, text] : results.plotdata) {
      std::ofstream out(out_dir / "plotdata" / name, std::ios::binary);
      if (!out)
        throw Error("cannot write " + (out_dir / "plotdata" / name).string());
      out << text;
    }
  }

  if (config.scenario == "weights-check") {
    for (const auto& row : results.summary)
      if (row.score == "failures" && row.mean > 0.0)
        throw NumericalError("weights-check: " +
                             std::to_string(static_cast<int>(row.mean)) +
                             " sweep entries exceeded tolerance");
  }
}

std::vector<WeightsCheckRow> weights_check(std::optional<double> tol) {
  const double ut_tol = tol.value_or(1e-12);
  const double gh_tol = tol.value_or(1e-9);

  std::vector<WeightsCheckRow> rows;
  for (int dim : {1, 2, 3, 5}) {
    std::vector<double> kappas = {0.0, 1.0, 2.0};
    if (3.0 - dim < 0.0) kappas.push_back(3.0 - dim);  // the 3-D heuristic value
    for (double kappa : kappas) {
      const UnitSigmaPointSet points = ut_points(dim, kappa);
      const TransformWeights w = bsq_weights_agnostic(
          points, ut_basis(dim), Eigen::VectorXd::Zero(1));
      WeightsCheckRow row;
      row.family = "ut";
      row.dim = dim;
      row.param = kappa;
      row.max_abs_err = (w.w_mean - points.weights).cwiseAbs().maxCoeff();
      row.tol = ut_tol;
      row.pass = row.max_abs_err < ut_tol;
      rows.push_back(row);
    }
  }
  for (int dim : {1, 2}) {
    for (int order : {2, 3, 4, 5}) {
      const UnitSigmaPointSet points = gh_points(dim, order);
      const TransformWeights w = bsq_weights_agnostic(
          points, gh_max_degree_basis(dim, order), Eigen::VectorXd::Zero(1));
      WeightsCheckRow row;
      row.family = "gh";
      row.dim = dim;
      row.param = order;
      row.max_abs_err = (w.w_mean - points.weights).cwiseAbs().maxCoeff();
      row.tol = gh_tol;
      row.pass = row.max_abs_err < gh_tol;
      rows.push_back(row);
    }
  }
  return rows;
}

int weights_check_report(std::ostream& os, std::optional<double> tol) {
  const auto rows = weights_check(tol);
  int failures = 0;
  for (const auto& row : rows) {
    os << (row.pass ? "pass" : "FAIL") << "  " << row.family << "  dim=" << row.dim
       << "  " << (row.family == "ut" ? "kappa=" : "order=") << row.param
       << "  max_abs_err=" << fmt(row.max_abs_err) << "  tol=" << fmt(row.tol)
       << '\n';
    failures += row.pass ? 0 : 1;
  }
  os << (failures == 0 ? "all weight recoveries within tolerance"
                       : std::to_string(failures) + " recoveries out of tolerance")
     << '\n';
  return failures;
}

std::string describe_config() {
  std::ostringstream os;
  os <<
      R"(Experiment configuration file (JSON). Omitted keys take the defaults of
the named scenario, so a minimal config is {"scenario": "ungm"}.

Top-level keys
  scenario   string   one of: polar | ungm | reentry | weights-check (required)
  seed       integer  master seed; every run/cell derives an independent
                      stream from it (defaults: polar 2001, ungm 2002,
                      reentry 2003)
  mc_runs    integer  Monte Carlo runs for filtering scenarios (default 100)
  horizon    integer  ungm steps per run (default 500; reentry always runs
                      2000 steps = 200 s at 0.1 s)
  measurement_uses_previous_state
             bool     ungm only: generate truth measurements from x_{k-1}
                      instead of x_k (default false)
  bootstrap_resamples integer  resamples behind every "spread2" (default 10000)
  weights_tol number  weights-check only: overrides both tolerances
                      (defaults 1e-12 for ut, 1e-9 for gh)
  polar      object   grid of the polar study (defaults below)
  transforms array    moment transforms to compare (defaults below)

Transform entries
  name         string  row label in results (required)
  method       string  classical | bsq | bsq-emv (default classical)
  points       string  ut | sr | gh (default ut; sr is classical-only)
  kappa        number  ut scaling, must exceed -dim (default 0)
  order        integer gh order p (default 5)
  scale        number  bsq kernel scale (default 1)
  lengthscale  number  bsq kernel lengthscale, broadcast over dimensions
  lengthscales array   per-dimension lengthscales (overrides lengthscale)
  emv_dynamics      number|array  bsq-emv: model-variance added per dynamics
                                  output (scalar broadcasts; default 0)
  emv_measurement   number|array  bsq-emv: same for the measurement side

Scenario defaults
  polar: 10 positions on a spiral (radius_start = 2 m, radius_step = 1 m,
    angle_start = 0, angle_step = 0.7 rad) x 10 angular noise levels
    (sigma_theta from 6 to 36 deg), sigma_r = 0.5 m, mc_samples = 10000;
    transforms: ut (classical, kappa = 2) and bsq-ut (kappa = 2, scale = 1,
    lengthscales = [60, 6]).
  ungm: horizon 500, mc_runs 100; transforms: ukf (classical ut, kappa = 2),
    bsq-ut (kappa = 2, scale = 3, lengthscale = 0.3), ghkf-5 (classical gh,
    order 5), bsq-gh-5 (order 5, scale = 5, lengthscale = 0.6), ghkf-7
    (classical gh, order 7), bsq-gh-7 (order 7, scale = 3, lengthscale = 0.4).
  reentry: mc_runs 100; transforms: bsqkf (bsq-emv ut, kappa = 0,
    emv_dynamics = 0.0002 on every state output, emv_measurement = 0) and
    ukf (classical ut, kappa = 0).

Outputs under --out
  results.csv            columns run_id,scenario,transform,score_name,value
  summary.json           per-(transform, score) mean and 2-sigma bootstrap
                         spread of the mean ("spread2")
  plotdata/*.csv         polar: skl_grid / skl_by_position / skl_by_sigma;
                         reentry: timeseries_<transform> with per-step RMSE
                         and INC for position, velocity and parameter blocks
)";
  return os.str();
}

}  // namespace bsq
