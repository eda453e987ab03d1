#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace bsq {

/// Symmetrized KL divergence between two Gaussians; nonnegative, zero iff
/// the moments coincide.
double skl(const Eigen::Ref<const Eigen::VectorXd>& mean_a,
           const Eigen::Ref<const Eigen::MatrixXd>& cov_a,
           const Eigen::Ref<const Eigen::VectorXd>& mean_b,
           const Eigen::Ref<const Eigen::MatrixXd>& cov_b);

/// sqrt(mean_k ||x_k - m_k||^2) over a trajectory.
double rmse(const std::vector<Eigen::VectorXd>& truth,
            const std::vector<Eigen::VectorXd>& estimates);

/// Same restricted to a component subset (e.g. position block).
double rmse(const std::vector<Eigen::VectorXd>& truth,
            const std::vector<Eigen::VectorXd>& estimates,
            const std::vector<int>& components);

/// Inclination indication per run: (10/T) sum_k log10 of the ratio of the
/// error's quadratic form under the reported covariance to the one under the
/// ensemble mean-squared-error matrix. Positive = optimistic covariance.
///
/// The MSE matrix at each step is estimated across the supplied runs, so at
/// least two runs are required. Near-singular matrices are regularized with
/// 1e-12*trace jitter; if `regularized` is non-null it receives the count of
/// such repairs. `components` optionally restricts to a state block.
std::vector<double> inc_per_run(
    const std::vector<std::vector<Eigen::VectorXd>>& truth_runs,
    const std::vector<std::vector<Eigen::VectorXd>>& estimate_runs,
    const std::vector<std::vector<Eigen::MatrixXd>>& cov_runs,
    const std::vector<int>& components = {}, int* regularized = nullptr);

/// Mean of inc_per_run over runs.
double inc(const std::vector<std::vector<Eigen::VectorXd>>& truth_runs,
           const std::vector<std::vector<Eigen::VectorXd>>& estimate_runs,
           const std::vector<std::vector<Eigen::MatrixXd>>& cov_runs,
           const std::vector<int>& components = {}, int* regularized = nullptr);

/// Two bootstrap standard deviations of the mean of `scores`; seeded and
/// deterministic.
double bootstrap_spread(const std::vector<double>& scores, int resamples = 10000,
                        std::uint64_t seed = 0);

}  // namespace bsq
