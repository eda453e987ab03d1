#include <doctest.h>

#include <cmath>

#include "bsq/errors.hpp"
#include "bsq/metrics.hpp"
#include "bsq/rng.hpp"

using namespace bsq;

namespace {

Eigen::MatrixXd random_spd(GaussRng& rng, int dim) {
  const Eigen::MatrixXd a = rng.normal_matrix(dim, dim);
  return a * a.transpose() + 0.2 * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

TEST_CASE("skl basics") {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  CHECK(skl(mean, cov, mean, cov) == doctest::Approx(0.0).scale(1));

  // 1-D: N(0,1) against N(0,2): 0.25 * (1/2 + 2 - 2) = 0.125.
  Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  CHECK(skl(zero1, Eigen::MatrixXd::Identity(1, 1), zero1,
            2.0 * Eigen::MatrixXd::Identity(1, 1)) == doctest::Approx(0.125));

  GaussRng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::VectorXd ma = rng.normal_vector(3);
    const Eigen::VectorXd mb = rng.normal_vector(3);
    const Eigen::MatrixXd sa = random_spd(rng, 3);
    const Eigen::MatrixXd sb = random_spd(rng, 3);
    const double ab = skl(ma, sa, mb, sb);
    CHECK(ab > 0.0);  // moments differ almost surely
    CHECK(std::abs(ab - skl(mb, sb, ma, sa)) < 1e-12);
  }

  CHECK_THROWS_AS(skl(zero1, Eigen::MatrixXd::Zero(1, 1), zero1,
                      Eigen::MatrixXd::Identity(1, 1)),
                  NumericalError);
  CHECK_THROWS_AS(skl(zero1, Eigen::MatrixXd::Identity(1, 1),
                      Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)),
                  DimensionError);
}

TEST_CASE("rmse") {
  std::vector<Eigen::VectorXd> truth, est;
  for (int k = 0; k < 10; ++k) {
    truth.push_back(Eigen::VectorXd::Constant(2, static_cast<double>(k)));
    est.push_back(Eigen::VectorXd::Constant(2, static_cast<double>(k)));
  }
  CHECK(rmse(truth, est) == 0.0);

  std::vector<Eigen::VectorXd> offset = est;
  for (auto& v : offset) v.array() += 0.5;
  CHECK(rmse(truth, offset) == doctest::Approx(0.5 * std::sqrt(2.0)));

  std::vector<Eigen::VectorXd> one_d_truth{Eigen::VectorXd::Zero(1)},
      one_d_est{Eigen::VectorXd::Constant(1, -0.75)};
  CHECK(rmse(one_d_truth, one_d_est) == doctest::Approx(0.75));

  // Component subsets.
  CHECK(rmse(truth, offset, {0}) == doctest::Approx(0.5));

  std::vector<Eigen::VectorXd> shorter(truth.begin(), truth.begin() + 5);
  CHECK_THROWS_AS(rmse(truth, shorter), DimensionError);
}

TEST_CASE("inc sign convention") {
  // Two runs, three steps, 1-D; reported covariance equal to the ensemble
  // mean-squared error gives zero inclination.
  std::vector<std::vector<Eigen::VectorXd>> truth(2), est(2);
  std::vector<std::vector<Eigen::MatrixXd>> covs(2);
  const double errors[2][3] = {{0.5, -1.0, 2.0}, {-0.5, 1.5, -1.0}};
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < 3; ++k) {
      truth[static_cast<std::size_t>(r)].push_back(
          Eigen::VectorXd::Constant(1, errors[r][k]));
      est[static_cast<std::size_t>(r)].push_back(Eigen::VectorXd::Zero(1));
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mse =
        0.5 * (errors[0][k] * errors[0][k] + errors[1][k] * errors[1][k]);
    for (int r = 0; r < 2; ++r)
      covs[static_cast<std::size_t>(r)].push_back(
          Eigen::MatrixXd::Constant(1, 1, mse));
  }
  CHECK(inc(truth, est, covs) == doctest::Approx(0.0).scale(1));

  // Shrinking the reported covariance tenfold adds exactly 10 per step.
  auto optimistic = covs;
  for (auto& run : optimistic)
    for (auto& p : run) p /= 10.0;
  CHECK(inc(truth, est, optimistic) == doctest::Approx(10.0));

  // Any shrink strictly increases the inclination.
  auto half = covs;
  for (auto& run : half)
    for (auto& p : run) p *= 0.5;
  CHECK(inc(truth, est, half) > inc(truth, est, covs));

  // A single run has no ensemble.
  std::vector<std::vector<Eigen::VectorXd>> single_truth{truth[0]},
      single_est{est[0]};
  std::vector<std::vector<Eigen::MatrixXd>> single_cov{covs[0]};
  CHECK_THROWS_AS(inc(single_truth, single_est, single_cov),
                  std::invalid_argument);
}

TEST_CASE("inc component restriction") {
  // 2-D state where only the first component is scored.
  std::vector<std::vector<Eigen::VectorXd>> truth(2), est(2);
  std::vector<std::vector<Eigen::MatrixXd>> covs(2);
  GaussRng rng(8);
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < 4; ++k) {
      truth[static_cast<std::size_t>(r)].push_back(rng.normal_vector(2));
      est[static_cast<std::size_t>(r)].push_back(Eigen::VectorXd::Zero(2));
      covs[static_cast<std::size_t>(r)].push_back(random_spd(rng, 2));
    }
  }
  const auto full = inc_per_run(truth, est, covs);
  const auto first_only = inc_per_run(truth, est, covs, {0});
  CHECK(full.size() == 2);
  CHECK(first_only.size() == 2);
  CHECK(full[0] != first_only[0]);
}

TEST_CASE("bootstrap spread") {
  const std::vector<double> constant(50, 3.25);
  CHECK(bootstrap_spread(constant, 2000, 1) == 0.0);

  GaussRng rng(5);
  std::vector<double> scores;
  for (int i = 0; i < 100; ++i) scores.push_back(rng.normal());
  const double a = bootstrap_spread(scores, 5000, 42);
  const double b = bootstrap_spread(scores, 5000, 42);
  CHECK(a == b);
  // Two bootstrap sigmas of the mean of ~N(0,1) scores: about 2/sqrt(100).
  CHECK(a == doctest::Approx(0.2).epsilon(0.35));

  CHECK_THROWS_AS(bootstrap_spread({}, 2000, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_spread(scores, 10, 1), std::invalid_argument);
}
