#include "bsq/metrics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "bsq/errors.hpp"
#include "bsq/rng.hpp"

namespace bsq {

namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m + m.transpose()));
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": covariance is singular");
  return llt;
}

// Quadratic form e^T M^-1 e with one 1e-12*trace jitter retry.
double quad_form(const Eigen::MatrixXd& m, const Eigen::VectorXd& e,
                 int* regularized) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd repaired = m;
    repaired.diagonal().array() += 1e-12 * m.trace();
    llt.compute(repaired);
    if (llt.info() != Eigen::Success)
      throw NumericalError("inc: covariance is singular even after jitter");
    if (regularized != nullptr) ++*regularized;
  }
  return e.dot(llt.solve(e));
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& c) {
  if (c.empty()) return v;
  Eigen::VectorXd out(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(c[i]);
  return out;
}

Eigen::MatrixXd select_block(const Eigen::MatrixXd& m, const std::vector<int>& c) {
  if (c.empty()) return m;
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = m(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

double skl(const Eigen::Ref<const Eigen::VectorXd>& mean_a,
           const Eigen::Ref<const Eigen::MatrixXd>& cov_a,
           const Eigen::Ref<const Eigen::VectorXd>& mean_b,
           const Eigen::Ref<const Eigen::MatrixXd>& cov_b) {
  const Eigen::Index dim = mean_a.size();
  if (mean_b.size() != dim || cov_a.rows() != dim || cov_a.cols() != dim ||
      cov_b.rows() != dim || cov_b.cols() != dim)
    throw DimensionError("skl: moment dimensions do not match");

  const auto llt_a = spd_factor(cov_a, "skl");
  const auto llt_b = spd_factor(cov_b, "skl");
  const Eigen::VectorXd diff = mean_b - mean_a;
  const double mahal = diff.dot(llt_b.solve(diff)) + diff.dot(llt_a.solve(diff));
  const double traces =
      llt_b.solve(cov_a).trace() + llt_a.solve(cov_b).trace();
  return 0.25 * (mahal + traces - 2.0 * static_cast<double>(dim));
}

double rmse(const std::vector<Eigen::VectorXd>& truth,
            const std::vector<Eigen::VectorXd>& estimates) {
  return rmse(truth, estimates, {});
}

double rmse(const std::vector<Eigen::VectorXd>& truth,
            const std::vector<Eigen::VectorXd>& estimates,
            const std::vector<int>& components) {
  if (truth.size() != estimates.size() || truth.empty())
    throw DimensionError("rmse: sequences must be nonempty and equal length");
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Eigen::VectorXd err =
        select(truth[k], components) - select(estimates[k], components);
    sum += err.squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

std::vector<double> inc_per_run(
    const std::vector<std::vector<Eigen::VectorXd>>& truth_runs,
    const std::vector<std::vector<Eigen::VectorXd>>& estimate_runs,
    const std::vector<std::vector<Eigen::MatrixXd>>& cov_runs,
    const std::vector<int>& components, int* regularized) {
  const std::size_t runs = truth_runs.size();
  if (runs < 2)
    throw std::invalid_argument("inc: the mean-squared-error matrix needs an "
                                "ensemble of at least 2 runs");
  if (estimate_runs.size() != runs || cov_runs.size() != runs)
    throw DimensionError("inc: run counts do not match");
  const std::size_t horizon = truth_runs.front().size();
  for (std::size_t r = 0; r < runs; ++r)
    if (truth_runs[r].size() != horizon || estimate_runs[r].size() != horizon ||
        cov_runs[r].size() != horizon)
      throw DimensionError("inc: sequence lengths do not match");
  if (horizon == 0) throw DimensionError("inc: empty sequences");

  // Errors per (run, step), restricted to the requested block.
  std::vector<std::vector<Eigen::VectorXd>> errors(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    errors[r].reserve(horizon);
    for (std::size_t k = 0; k < horizon; ++k)
      errors[r].push_back(select(truth_runs[r][k], components) -
                          select(estimate_runs[r][k], components));
  }

  // Ensemble mean-squared-error matrix at each step.
  const Eigen::Index dim = errors.front().front().size();
  std::vector<Eigen::MatrixXd> mse(horizon, Eigen::MatrixXd::Zero(dim, dim));
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t r = 0; r < runs; ++r)
      mse[k] += errors[r][k] * errors[r][k].transpose();
    mse[k] /= static_cast<double>(runs);
  }

  std::vector<double> out(runs, 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
      const double reported =
          quad_form(select_block(cov_runs[r][k], components), errors[r][k],
                    regularized);
      const double empirical = quad_form(mse[k], errors[r][k], regularized);
      sum += std::log10(reported / empirical);
    }
    out[r] = 10.0 * sum / static_cast<double>(horizon);
  }
  return out;
}

double inc(const std::vector<std::vector<Eigen::VectorXd>>& truth_runs,
           const std::vector<std::vector<Eigen::VectorXd>>& estimate_runs,
           const std::vector<std::vector<Eigen::MatrixXd>>& cov_runs,
           const std::vector<int>& components, int* regularized) {
  const std::vector<double> per_run =
      inc_per_run(truth_runs, estimate_runs, cov_runs, components, regularized);
  double sum = 0.0;
  for (double v : per_run) sum += v;
  return sum / static_cast<double>(per_run.size());
}

double bootstrap_spread(const std::vector<double>& scores, int resamples,
                        std::uint64_t seed) {
  if (scores.empty())
    throw std::invalid_argument("bootstrap_spread: no scores supplied");
  if (resamples < 1000)
    throw std::invalid_argument("bootstrap_spread: need >= 1000 resamples");

  GaussRng rng(seed);
  const auto n = scores.size();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int b = 0; b < resamples; ++b) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      if (j >= n) j = n - 1;
      total += scores[j];
    }
    const double mean = total / static_cast<double>(n);
    sum += mean;
    sum_sq += mean * mean;
  }
  const double b = static_cast<double>(resamples);
  const double mean = sum / b;
  const double var = std::max(0.0, (sum_sq - b * mean * mean) / (b - 1.0));
  return 2.0 * std::sqrt(var);
}

}  // namespace bsq
