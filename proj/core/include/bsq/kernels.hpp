#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "bsq/poly_basis.hpp"
#include "bsq/sigma_points.hpp"

namespace bsq {

/// RBF kernel parameters: k(x, x') = scale^2 prod_d exp(-(x_d-x'_d)^2 / (2 l_d^2)).
struct RbfParams {
  double scale = 1.0;
  Eigen::VectorXd lengthscales;

  int dim() const { return static_cast<int>(lengthscales.size()); }
  static RbfParams isotropic(int dim, double scale, double lengthscale);
};

double rbf_eval(const RbfParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y);

/// Gram matrix of a point set with escalating diagonal jitter
/// (1e-12*scale^2 up to 1e-8*scale^2) until the Cholesky succeeds.
struct GramMatrix {
  Eigen::MatrixXd values;      // jittered
  Eigen::MatrixXd chol_lower;  // lower factor of `values`
  double jitter = 0.0;
};

GramMatrix gram_matrix(const RbfParams& params, const UnitSigmaPointSet& points);

/// Raw (unjittered) Gram matrix; used where only traces are needed.
Eigen::MatrixXd gram_matrix_raw(const RbfParams& params,
                                const UnitSigmaPointSet& points);

/// E[k(xi, xi)] = scale^2: the RBF kernel is constant on the diagonal.
double kernel_diag_expectation(const RbfParams& params);

/// E[k(xi, xi')] over independent xi, xi' ~ N(0, I):
/// scale^2 prod_d l_d / sqrt(l_d^2 + 2).
double kernel_double_expectation(const RbfParams& params);

/// Vector of E_xi[k(xi, x_n)] over the point set.
Eigen::VectorXd kernel_point_expectations(const RbfParams& params,
                                          const UnitSigmaPointSet& points);

/// N x Q matrix with entry (n, q) = E_xi[k(xi, x_n) xi^{alpha_q}], the
/// closed-form Gaussian expectation of kernel times monomial. Per-dimension
/// exponential factors are accumulated in log space before a single exp.
Eigen::MatrixXd kernel_poly_cross_expectation(const RbfParams& params,
                                              const UnitSigmaPointSet& points,
                                              const MultiIndexBasis& basis);

/// Seeded Monte Carlo estimate of E[f(xi)], xi ~ N(0, I_dim), with its
/// standard error. Backs the closed-form expectations in tests.
struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

McEstimate mc_expectation_oracle(
    const std::function<double(const Eigen::VectorXd&)>& integrand, int dim,
    std::int64_t samples, std::uint64_t seed);

}  // namespace bsq
