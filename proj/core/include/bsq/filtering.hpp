#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "bsq/transforms.hpp"

namespace bsq {

using StateFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>;

/// Discrete-time state-space model with additive Gaussian noise:
/// x_k = f(x_{k-1}, k) + q_{k-1}, y_k = h(x_k, k) + r_k.
struct StateSpaceModel {
  int state_dim = 0;
  int meas_dim = 0;
  StateFn dynamics;                       // f(x, k)
  StateFn measurement;                    // h(x, k)
  Eigen::MatrixXd process_noise;          // Q
  Eigen::MatrixXd meas_noise;             // R
  GaussianMoments init;                   // moments of x_0
  std::vector<int> angular_measurements;  // y components wrapped to [-pi, pi)
};

struct FilterState {
  int k = 0;
  GaussianMoments posterior;
};

/// One filter step's diagnostics.
struct FilterStep {
  int k = 0;
  GaussianMoments prior;           // m_{k|k-1}, P_{k|k-1}
  GaussianMoments posterior;       // m_{k|k}, P_{k|k}
  Eigen::VectorXd innovation;      // wrapped measurement residual
  Eigen::MatrixXd innovation_cov;  // S
};

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

/// Time update: propagates the posterior at state.k through f(., state.k+1)
/// and adds the process noise covariance.
GaussianMoments predict(const StateSpaceModel& model,
                        const TransformWeights& transform_f,
                        const FilterState& state);

/// Measurement update at step k: transforms the prior through h(., k), adds R
/// to the innovation covariance, and applies the gain via a Cholesky solve.
/// Innovations of angular components are wrapped before use.
GaussianMoments update(const StateSpaceModel& model,
                       const TransformWeights& transform_h,
                       const GaussianMoments& prior,
                       const Eigen::Ref<const Eigen::VectorXd>& y, int k);

/// Runs predict/update over measurements y_1..y_T starting from model.init
/// (k = 0). Errors abort with the failing step index in the message.
std::vector<FilterStep> run_filter(const StateSpaceModel& model,
                                   const TransformWeights& transform_f,
                                   const TransformWeights& transform_h,
                                   const std::vector<Eigen::VectorXd>& measurements);

}  // namespace bsq
