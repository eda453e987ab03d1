#include "bsq/models.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "bsq/errors.hpp"
#include "bsq/rng.hpp"

namespace bsq {

namespace {

// Matrix square root of a PSD matrix: Cholesky when possible, eigenvalue
// square root otherwise (singular covariances are legal here, e.g. an exactly
// known initial component).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Sub-stream ids within one simulation seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kProcessStream = 1;
constexpr std::uint64_t kMeasurementStream = 2;

std::string format_row(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  char buf[32];
  std::string row = std::to_string(k);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x(i));
    row += ',';
    row += buf;
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", y(i));
    row += ',';
    row += buf;
  }
  return row;
}

}  // namespace

Eigen::Vector2d polar_to_cartesian(const Eigen::Ref<const Eigen::Vector2d>& polar) {
  return {polar(0) * std::cos(polar(1)), polar(0) * std::sin(polar(1))};
}

StateSpaceModel ungm_model() {
  StateSpaceModel model;
  model.state_dim = 1;
  model.meas_dim = 1;
  model.dynamics = [](const Eigen::VectorXd& x, int k) {
    const double v = x(0);
    Eigen::VectorXd out(1);
    out(0) = 0.5 * v + 25.0 * v / (1.0 + v * v) + 8.0 * std::cos(1.2 * k);
    return out;
  };
  model.measurement = [](const Eigen::VectorXd& x, int) {
    Eigen::VectorXd out(1);
    out(0) = x(0) * x(0) / 20.0;
    return out;
  };
  model.process_noise = Eigen::MatrixXd::Constant(1, 1, 10.0);
  model.meas_noise = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.init.mean = Eigen::VectorXd::Zero(1);
  model.init.cov = Eigen::MatrixXd::Constant(1, 1, 5.0);
  return model;
}

Trajectory simulate_trajectory(const StateSpaceModel& model, int horizon,
                               std::uint64_t seed) {
  if (horizon < 1)
    throw std::invalid_argument("simulate_trajectory: horizon must be >= 1");

  GaussRng init_rng(mix_seed(seed, kInitStream));
  GaussRng process_rng(mix_seed(seed, kProcessStream));
  GaussRng meas_rng(mix_seed(seed, kMeasurementStream));

  const Eigen::MatrixXd init_root = psd_sqrt(model.init.cov);
  const Eigen::MatrixXd q_root = psd_sqrt(model.process_noise);
  const Eigen::MatrixXd r_root = psd_sqrt(model.meas_noise);

  Trajectory traj;
  traj.states.reserve(horizon);
  traj.measurements.reserve(horizon);

  Eigen::VectorXd x =
      model.init.mean + init_root * init_rng.normal_vector(model.state_dim);
  for (int k = 1; k <= horizon; ++k) {
    x = model.dynamics(x, k) + q_root * process_rng.normal_vector(model.state_dim);
    const Eigen::VectorXd y =
        model.measurement(x, k) + r_root * meas_rng.normal_vector(model.meas_dim);
    traj.states.push_back(x);
    traj.measurements.push_back(y);
  }
  return traj;
}

std::vector<Eigen::VectorXd> regenerate_measurements(
    const StateSpaceModel& model, const std::vector<Eigen::VectorXd>& states,
    std::uint64_t seed) {
  GaussRng meas_rng(mix_seed(seed, kMeasurementStream));
  const Eigen::MatrixXd r_root = psd_sqrt(model.meas_noise);
  std::vector<Eigen::VectorXd> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    out.push_back(model.measurement(states[i], k) +
                  r_root * meas_rng.normal_vector(model.meas_dim));
  }
  return out;
}

namespace reentry {

Eigen::VectorXd drift(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double px = x(0);
  const double py = x(1);
  const double vx = x(2);
  const double vy = x(3);
  const double theta = x(4);
  const double radius = std::sqrt(px * px + py * py);
  const double speed = std::sqrt(vx * vx + vy * vy);
  const double drag = kBallisticCoef * std::exp(theta) *
                      std::exp((kEarthRadius - radius) / kScaleHeight) * speed;
  const double gravity = -kGravityConst / (radius * radius * radius);
  Eigen::VectorXd out(5);
  out << vx, vy, drag * vx + gravity * px, drag * vy + gravity * py, 0.0;
  return out;
}

}  // namespace reentry

Trajectory reentry_truth_simulate(std::uint64_t seed) {
  using namespace reentry;

  GaussRng init_rng(mix_seed(seed, kInitStream));
  GaussRng process_rng(mix_seed(seed, kProcessStream));
  GaussRng meas_rng(mix_seed(seed, kMeasurementStream));

  Eigen::VectorXd x(5);
  x << 6500.0, 350.0, -1.8, -6.8, 0.7;
  const double init_std = 1e-3;  // sqrt(1e-6); theta starts exactly at 0.7
  for (int d = 0; d < 4; ++d) x(d) += init_std * init_rng.normal();

  const int truth_steps = static_cast<int>(kDuration / kTruthDt + 0.5);
  const int subsample = static_cast<int>(kFilterDt / kTruthDt + 0.5);
  const double vel_step_std = std::sqrt(kVelNoiseDensity * kTruthDt);

  const double range_std = 1e-3;                 // sqrt(1e-6) km
  const double bearing_std = std::sqrt(0.17e-6);  // rad

  Trajectory traj;
  traj.states.reserve(truth_steps / subsample);
  traj.measurements.reserve(truth_steps / subsample);

  for (int step = 1; step <= truth_steps; ++step) {
    x += kTruthDt * drift(x);
    x(2) += vel_step_std * process_rng.normal();
    x(3) += vel_step_std * process_rng.normal();
    // theta noise density is zero in the truth model.

    const double radius = std::hypot(x(0), x(1));
    if (!(radius > 0.0) || !x.allFinite())
      throw SimulationError("reentry_truth_simulate: trajectory left the "
                            "physical domain at step " + std::to_string(step));

    if (step % subsample == 0) {
      Eigen::VectorXd y(2);
      y(0) = radius + range_std * meas_rng.normal();
      y(1) = std::atan2(x(1), x(0)) + bearing_std * meas_rng.normal();
      traj.states.push_back(x);
      traj.measurements.push_back(y);
    }
  }
  return traj;
}

StateSpaceModel reentry_filter_model() {
  using namespace reentry;

  StateSpaceModel model;
  model.state_dim = 5;
  model.meas_dim = 2;
  model.dynamics = [](const Eigen::VectorXd& x, int) {
    return (x + kFilterDt * drift(x)).eval();
  };
  model.measurement = [](const Eigen::VectorXd& x, int) {
    Eigen::VectorXd y(2);
    y(0) = std::hypot(x(0), x(1));
    y(1) = std::atan2(x(1), x(0));
    return y;
  };
  Eigen::VectorXd q_diag(5);
  q_diag << 0.0, 0.0, kVelNoiseDensity, kVelNoiseDensity, kFilterThetaNoise;
  model.process_noise = (kFilterDt * q_diag).asDiagonal();
  Eigen::VectorXd r_diag(2);
  r_diag << 1e-6, 0.17e-6;
  model.meas_noise = r_diag.asDiagonal();

  model.init.mean.resize(5);
  model.init.mean << 6500.0, 350.0, -1.1, -6.1, 0.7;
  Eigen::VectorXd p_diag(5);
  p_diag << 1e-6, 1e-6, 1e-6, 1e-6, 1.0;
  model.init.cov = p_diag.asDiagonal();

  model.angular_measurements = {1};
  return model;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.states.size() != traj.measurements.size())
    throw DimensionError("write_trajectory_csv: state/measurement length "
                         "mismatch");
  const Eigen::Index sd = traj.states.empty() ? 0 : traj.states.front().size();
  const Eigen::Index md =
      traj.measurements.empty() ? 0 : traj.measurements.front().size();
  os << "k";
  for (Eigen::Index i = 0; i < sd; ++i) os << ",x" << (i + 1);
  for (Eigen::Index i = 0; i < md; ++i) os << ",y" << (i + 1);
  os << '\n';
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    os << format_row(static_cast<int>(i) + 1, traj.states[i],
                     traj.measurements[i])
       << '\n';
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header))
    throw Error("read_trajectory_csv: empty input");
  Eigen::Index sd = 0;
  Eigen::Index md = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (!col.empty() && col[0] == 'x') ++sd;
      if (!col.empty() && col[0] == 'y') ++md;
    }
  }
  if (sd == 0 || md == 0)
    throw Error("read_trajectory_csv: malformed header: " + header);

  Trajectory traj;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // k column
    Eigen::VectorXd x(sd);
    Eigen::VectorXd y(md);
    for (Eigen::Index i = 0; i < sd; ++i) {
      std::getline(ss, cell, ',');
      x(i) = std::stod(cell);
    }
    for (Eigen::Index i = 0; i < md; ++i) {
      std::getline(ss, cell, ',');
      y(i) = std::stod(cell);
    }
    traj.states.push_back(std::move(x));
    traj.measurements.push_back(std::move(y));
  }
  return traj;
}

}  // namespace bsq
