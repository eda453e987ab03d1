#include "bsq/filtering.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "bsq/errors.hpp"

namespace bsq {

namespace {

constexpr double kPi = 3.14159265358979323846;

// One symmetrize-and-jitter retry on a failed input-covariance Cholesky.
GaussianMoments transform_with_retry(const TransformWeights& weights,
                                     const VectorFn& f,
                                     const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& cov) {
  try {
    return apply_transform(weights, f, mean, cov);
  } catch (const NumericalError&) {
    Eigen::MatrixXd repaired = 0.5 * (cov + cov.transpose());
    repaired.diagonal().array() += 1e-10 * repaired.trace();
    return apply_transform(weights, f, mean, repaired);
  }
}

struct UpdateResult {
  GaussianMoments posterior;
  Eigen::VectorXd residual;
  Eigen::MatrixXd innovation_cov;
};

UpdateResult update_from_measurement_moments(const StateSpaceModel& model,
                                             const GaussianMoments& prior,
                                             const GaussianMoments& meas,
                                             const Eigen::VectorXd& y) {
  UpdateResult out;
  Eigen::MatrixXd s = meas.cov + model.meas_noise;
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    s.diagonal().array() += 1e-10 * s.trace();
    llt.compute(s);
    if (llt.info() != Eigen::Success)
      throw NumericalError("update: innovation covariance is not positive "
                           "definite");
  }

  out.residual = y - meas.mean;
  for (int idx : model.angular_measurements)
    out.residual(idx) = wrap_angle(out.residual(idx));
  out.innovation_cov = s;

  // K = C S^-1, via the Cholesky solve S K^T = C^T.
  const Eigen::MatrixXd gain = llt.solve(meas.cross.transpose()).transpose();
  out.posterior.mean = prior.mean + gain * out.residual;
  out.posterior.cov = prior.cov - gain * s * gain.transpose();
  out.posterior.cov =
      0.5 * (out.posterior.cov + out.posterior.cov.transpose()).eval();
  return out;
}

}  // namespace

double wrap_angle(double a) {
  const double two_pi = 2.0 * kPi;
  double wrapped = std::fmod(a + kPi, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  return wrapped - kPi;
}

GaussianMoments predict(const StateSpaceModel& model,
                        const TransformWeights& transform_f,
                        const FilterState& state) {
  const int k_next = state.k + 1;
  const auto f = [&](const Eigen::VectorXd& x) {
    return model.dynamics(x, k_next);
  };
  GaussianMoments predicted = transform_with_retry(
      transform_f, f, state.posterior.mean, state.posterior.cov);
  predicted.cov += model.process_noise;
  predicted.cov = 0.5 * (predicted.cov + predicted.cov.transpose()).eval();
  return predicted;
}

GaussianMoments update(const StateSpaceModel& model,
                       const TransformWeights& transform_h,
                       const GaussianMoments& prior,
                       const Eigen::Ref<const Eigen::VectorXd>& y, int k) {
  if (y.size() != model.meas_dim)
    throw DimensionError("update: measurement dimension mismatch");
  const auto h = [&](const Eigen::VectorXd& x) {
    return model.measurement(x, k);
  };
  const GaussianMoments meas =
      transform_with_retry(transform_h, h, prior.mean, prior.cov);
  return update_from_measurement_moments(model, prior, meas, y).posterior;
}

std::vector<FilterStep> run_filter(const StateSpaceModel& model,
                                   const TransformWeights& transform_f,
                                   const TransformWeights& transform_h,
                                   const std::vector<Eigen::VectorXd>& measurements) {
  if (measurements.empty())
    throw std::invalid_argument("run_filter: no measurements supplied");

  std::vector<FilterStep> steps;
  steps.reserve(measurements.size());
  FilterState state{0, model.init};
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (measurements[i].size() != model.meas_dim)
      throw DimensionError("run_filter: measurement dimension mismatch at step " +
                           std::to_string(k));
    try {
      FilterStep step;
      step.k = k;
      step.prior = predict(model, transform_f, state);

      const auto h = [&](const Eigen::VectorXd& x) {
        return model.measurement(x, k);
      };
      const GaussianMoments meas =
          transform_with_retry(transform_h, h, step.prior.mean, step.prior.cov);
      UpdateResult res =
          update_from_measurement_moments(model, step.prior, meas, measurements[i]);
      step.innovation = std::move(res.residual);
      step.innovation_cov = std::move(res.innovation_cov);
      step.posterior = std::move(res.posterior);

      state = FilterState{k, step.posterior};
      steps.push_back(std::move(step));
    } catch (const IntegrandError& e) {
      throw IntegrandError("step " + std::to_string(k) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("step " + std::to_string(k) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("step " + std::to_string(k) + ": " + e.what());
    }
  }
  return steps;
}

}  // namespace bsq
