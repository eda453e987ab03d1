#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bsq/errors.hpp"
#include "bsq/rng.hpp"
#include "bsq/transforms.hpp"

using namespace bsq;

namespace {

Eigen::MatrixXd random_spd(GaussRng& rng, int dim, double scale) {
  const Eigen::MatrixXd a = scale * rng.normal_matrix(dim, dim);
  return a * a.transpose() + 0.1 * scale * scale * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

TEST_CASE("classical weights") {
  const auto ut = classical_weights(ut_points(1, 2.0));
  CHECK(ut.w_cov(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(ut.w_cov(1, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(ut.w_cov(2, 2) == doctest::Approx(1.0 / 6.0));
  CHECK(ut.w_cov(0, 1) == 0.0);
  CHECK(ut.emv.size() == 1);
  CHECK(ut.emv(0) == 0.0);

  const auto gh = classical_weights(gh_points(1, 3));
  // Columns follow the ascending-root ordering: -sqrt(3), 0, +sqrt(3).
  CHECK(gh.w_cross(0, 0) == doctest::Approx(-std::sqrt(3.0) / 6.0));
  CHECK(gh.w_cross(0, 1) == doctest::Approx(0.0));
  CHECK(gh.w_cross(0, 2) == doctest::Approx(std::sqrt(3.0) / 6.0));

  CHECK(classical_weights(spherical_radial_points(3)).emv(0) == 0.0);
}

TEST_CASE("bayes-sard weights recover the unscented transform") {
  for (int dim : {1, 2, 3, 5}) {
    for (double kappa : {0.0, 1.0, 2.0, 3.0 - dim}) {
      if (!(dim + kappa > 0.0)) continue;
      const auto points = ut_points(dim, kappa);
      const auto w = bsq_weights_agnostic(points, ut_basis(dim),
                                          Eigen::VectorXd::Zero(1));
      CHECK((w.w_mean - points.weights).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("bayes-sard weights recover gauss-hermite") {
  for (int dim : {1, 2}) {
    for (int p : {2, 3, 4, 5}) {
      const auto points = gh_points(dim, p);
      const auto w = bsq_weights_agnostic(points, gh_max_degree_basis(dim, p),
                                          Eigen::VectorXd::Zero(1));
      CHECK((w.w_mean - points.weights).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("gauss-hermite covariance weights collapse to the diagonal") {
  for (int dim : {1, 2}) {
    for (int p : {2, 3, 4, 5}) {
      const auto points = gh_points(dim, p);
      const auto w = bsq_weights_agnostic(points, gh_max_degree_basis(dim, p),
                                          Eigen::VectorXd::Zero(1));
      const Eigen::MatrixXd diag = Eigen::MatrixXd(points.weights.asDiagonal());
      CHECK((w.w_cov - diag).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("single-point model: frozen expected model variance") {
  UnitSigmaPointSet origin;
  origin.dim = 1;
  origin.points = Eigen::MatrixXd::Zero(1, 1);
  origin.weights = Eigen::VectorXd::Ones(1);
  MultiIndexBasis constant{1, {MultiIndex{{0}}}};

  const auto w = bsq_weights(origin, constant, RbfParams::isotropic(1, 1.0, 1.0));
  CHECK(w.w_mean(0) == doctest::Approx(1.0));
  CHECK(w.w_cov(0, 0) == doctest::Approx(1.0));
  CHECK(w.emv(0) == doctest::Approx(2.0 - std::sqrt(2.0)));
}

TEST_CASE("expected model variance is nonnegative across settings") {
  for (double ell : {0.3, 0.6, 1.0, 5.0, 60.0}) {
    for (double scale : {1.0, 3.0, 5.0}) {
      const auto w = bsq_weights(ut_points(1, 2.0), ut_basis(1),
                                 RbfParams::isotropic(1, scale, ell));
      CHECK(w.emv(0) >= 0.0);
    }
  }
  const auto w5 = bsq_weights(ut_points(5, 0.0), ut_basis(5),
                              RbfParams::isotropic(5, 1.0, 1.0));
  CHECK(w5.emv(0) >= 0.0);
}

TEST_CASE("weight construction rejects bad systems") {
  CHECK_THROWS_AS(bsq_weights_agnostic(ut_points(2, 1.0), ut_basis(1),
                                       Eigen::VectorXd::Zero(1)),
                  DimensionError);
  CHECK_THROWS_AS(bsq_weights_agnostic(gh_points(1, 4), gh_max_degree_basis(1, 3),
                                       Eigen::VectorXd::Zero(1)),
                  DimensionError);
  CHECK_THROWS_AS(bsq_weights_agnostic(ut_points(1, 2.0), ut_basis(1),
                                       -Eigen::VectorXd::Ones(1)),
                  std::invalid_argument);

  UnitSigmaPointSet duplicated;
  duplicated.dim = 1;
  duplicated.points.resize(1, 3);
  duplicated.points << 0.0, 1.0, 1.0;
  duplicated.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THROWS_AS(
      bsq_weights_agnostic(duplicated, ut_basis(1), Eigen::VectorXd::Zero(1)),
      RankError);
}

TEST_CASE("kernel and kernel-agnostic weights share every weight matrix") {
  const auto points = gh_points(1, 5);
  const auto basis = gh_max_degree_basis(1, 5);
  const auto with_kernel =
      bsq_weights(points, basis, RbfParams::isotropic(1, 5.0, 0.6));
  const auto agnostic =
      bsq_weights_agnostic(points, basis, Eigen::VectorXd::Constant(1, 0.125));
  CHECK((with_kernel.w_mean - agnostic.w_mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((with_kernel.w_cov - agnostic.w_cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK((with_kernel.w_cross - agnostic.w_cross).cwiseAbs().maxCoeff() == 0.0);
  CHECK(agnostic.emv(0) == 0.125);
}

TEST_CASE("per-output kernels produce one model variance per output") {
  const auto points = ut_points(1, 2.0);
  const auto basis = ut_basis(1);
  const std::vector<RbfParams> kernels = {RbfParams::isotropic(1, 1.0, 0.5),
                                          RbfParams::isotropic(1, 2.0, 2.0)};
  const auto w = bsq_weights(points, basis, kernels);
  REQUIRE(w.emv.size() == 2);
  CHECK(w.emv(0) == bsq_weights(points, basis, kernels[0]).emv(0));
  CHECK(w.emv(1) == bsq_weights(points, basis, kernels[1]).emv(0));
}

TEST_CASE("transform of the identity map") {
  const auto weights = classical_weights(ut_points(2, 1.0));
  Eigen::VectorXd mean(2);
  mean << 1.5, -0.5;
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  const auto moments =
      apply_transform(weights, [](const Eigen::VectorXd& x) { return x; }, mean, cov);
  CHECK((moments.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((moments.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((moments.cross - cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("transform of an affine map matches the closed form") {
  GaussRng rng(5);
  Eigen::MatrixXd a(3, 2);
  a << 1.0, -2.0, 0.5, 0.0, 2.0, 1.0;
  Eigen::VectorXd b(3);
  b << 0.1, -3.0, 2.0;
  const Eigen::VectorXd mean = rng.normal_vector(2);
  const Eigen::MatrixXd cov = random_spd(rng, 2, 1.0);
  const auto f = [&](const Eigen::VectorXd& x) { return (a * x + b).eval(); };

  for (const auto& weights :
       {classical_weights(ut_points(2, 2.0)), classical_weights(gh_points(2, 3)),
        bsq_weights_agnostic(ut_points(2, 2.0), ut_basis(2),
                             Eigen::VectorXd::Zero(1))}) {
    const auto moments = apply_transform(weights, f, mean, cov);
    CHECK((moments.mean - (a * mean + b)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((moments.cov - a * cov * a.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((moments.cross - cov * a.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("model variance inflates only the output covariance") {
  const double emv = 0.37;
  const auto weights = bsq_weights_agnostic(ut_points(2, 2.0), ut_basis(2),
                                            Eigen::VectorXd::Constant(1, emv));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.4, -0.2, -0.2, 0.8;
  const auto moments = apply_transform(
      weights, [](const Eigen::VectorXd& x) { return x; }, mean, cov);
  const Eigen::MatrixXd expected =
      cov + emv * Eigen::MatrixXd::Identity(2, 2);
  CHECK((moments.cov - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((moments.cross - cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("per-output model variance broadcast") {
  Eigen::VectorXd emv(2);
  emv << 0.1, 0.9;
  const auto weights = bsq_weights_agnostic(ut_points(2, 2.0), ut_basis(2), emv);
  const auto moments = apply_transform(
      weights, [](const Eigen::VectorXd& x) { return x; },
      Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK(moments.cov(0, 0) == doctest::Approx(1.1));
  CHECK(moments.cov(1, 1) == doctest::Approx(1.9));

  // Mismatched emv length is rejected at application time.
  Eigen::VectorXd wrong(3);
  wrong << 0.1, 0.1, 0.1;
  const auto bad = bsq_weights_agnostic(ut_points(2, 2.0), ut_basis(2), wrong);
  CHECK_THROWS_AS(apply_transform(
                      bad, [](const Eigen::VectorXd& x) { return x; },
                      Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)),
                  DimensionError);
}

TEST_CASE("transform input validation") {
  const auto weights = classical_weights(ut_points(2, 1.0));
  const auto identity = [](const Eigen::VectorXd& x) { return x; };
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(
      apply_transform(weights, identity, Eigen::VectorXd::Zero(2), indefinite),
      NumericalError);

  const auto nan_at_offcenter = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd y = x;
    if (x.norm() > 1.0) y(0) = std::nan("");
    return y;
  };
  CHECK_THROWS_WITH_AS(
      apply_transform(weights, nan_at_offcenter, Eigen::VectorXd::Zero(2),
                      Eigen::MatrixXd::Identity(2, 2)),
      doctest::Contains("sigma-point"), IntegrandError);
}

TEST_CASE("transformed mean is invariant between classical and bayes-sard") {
  GaussRng rng(9);
  const auto f = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(2);
    y << std::sin(x(0)) + x(1) * x(1), std::exp(0.3 * x(0)) - x(1);
    return y;
  };
  const Eigen::VectorXd mean = rng.normal_vector(2);
  const Eigen::MatrixXd cov = random_spd(rng, 2, 0.8);

  const auto classical_ut = classical_weights(ut_points(2, 2.0));
  const auto bsq_ut = bsq_weights_agnostic(ut_points(2, 2.0), ut_basis(2),
                                           Eigen::VectorXd::Zero(1));
  CHECK((apply_transform(classical_ut, f, mean, cov).mean -
         apply_transform(bsq_ut, f, mean, cov).mean)
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  const auto classical_gh = classical_weights(gh_points(2, 4));
  const auto bsq_gh = bsq_weights_agnostic(gh_points(2, 4),
                                           gh_max_degree_basis(2, 4),
                                           Eigen::VectorXd::Zero(1));
  CHECK((apply_transform(classical_gh, f, mean, cov).mean -
         apply_transform(bsq_gh, f, mean, cov).mean)
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("output covariance stays positive semi-definite") {
  GaussRng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int dim = 1 + static_cast<int>(rng.uniform() * 3.0);
    const int out_dim = 1 + static_cast<int>(rng.uniform() * 3.0);
    const int kind = trial % 3;

    TransformWeights weights;
    if (kind == 0) {
      weights = bsq_weights(ut_points(dim, 0.5 + rng.uniform() * 2.0),
                            ut_basis(dim),
                            RbfParams::isotropic(dim, 0.5 + rng.uniform() * 3.0,
                                                 0.3 + rng.uniform() * 3.0));
    } else if (kind == 1) {
      weights = bsq_weights_agnostic(
          ut_points(dim, 1.0), ut_basis(dim),
          Eigen::VectorXd::Constant(1, rng.uniform() * 0.5));
    } else {
      const int p = 2 + static_cast<int>(rng.uniform() * 3.0);
      weights = bsq_weights(gh_points(dim, p), gh_max_degree_basis(dim, p),
                            RbfParams::isotropic(dim, 1.0, 0.4 + rng.uniform()));
    }

    const Eigen::MatrixXd coeff = rng.normal_matrix(out_dim, dim);
    const Eigen::MatrixXd quad = 0.3 * rng.normal_matrix(out_dim, dim);
    const auto f = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = coeff * x;
      for (int e = 0; e < out_dim; ++e)
        y(e) += quad.row(e).dot(x.array().sin().matrix()) +
                0.1 * x.squaredNorm();
      return y;
    };
    const Eigen::VectorXd mean = rng.normal_vector(dim);
    const Eigen::MatrixXd cov = random_spd(rng, dim, 0.7);

    const auto moments = apply_transform(weights, f, mean, cov);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moments.cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * moments.cov.trace());
    ++checked;
  }
  CHECK(checked == 500);
}

TEST_CASE("scalar integral variance diagnostics") {
  const auto kernel = RbfParams::isotropic(1, 1.0, 1.0);
  double previous = 1e300;
  for (int p : {3, 5, 7}) {
    const double v = bsq_integral_variance(gh_points(1, p),
                                           gh_max_degree_basis(1, p), kernel);
    CHECK(v >= 0.0);
    CHECK(v < previous);
    previous = v;
  }

  // Scale factorization.
  const double base = bsq_integral_variance(ut_points(1, 2.0), ut_basis(1),
                                            RbfParams::isotropic(1, 1.0, 1.0));
  const double scaled = bsq_integral_variance(ut_points(1, 2.0), ut_basis(1),
                                              RbfParams::isotropic(1, 3.0, 1.0));
  CHECK(scaled == doctest::Approx(9.0 * base));

  for (double ell : {0.3, 1.0, 5.0})
    CHECK(bsq_integral_variance(ut_points(2, 0.0), ut_basis(2),
                                RbfParams::isotropic(2, 1.0, ell)) >= 0.0);
}
