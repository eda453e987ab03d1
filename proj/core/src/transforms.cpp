#include "bsq/transforms.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "bsq/errors.hpp"

namespace bsq {

namespace {

constexpr double kEmvRoundoffTol = 1e-8;

void check_point_set(const UnitSigmaPointSet& points, const char* where) {
  if (points.dim < 1 || points.count() < 1 ||
      points.points.rows() != points.dim ||
      points.weights.size() != points.count())
    throw DimensionError(std::string(where) + ": malformed sigma-point set");
}

// Shared part of the Bayes-Sard construction: everything except the
// expected model variance. Returns the alternant factorization for reuse.
struct BsqCore {
  TransformWeights weights;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_vt;  // factors V^T
};

BsqCore bsq_core(const UnitSigmaPointSet& points, const MultiIndexBasis& basis) {
  check_point_set(points, "bsq_weights");
  if (basis.dim != points.dim)
    throw DimensionError("bsq_weights: basis dimension does not match points");
  if (basis.size() != points.count())
    throw DimensionError("bsq_weights: need a square system, got " +
                         std::to_string(points.count()) + " points and " +
                         std::to_string(basis.size()) + " basis functions");
  if (!is_unisolvent(basis, points))
    throw RankError("bsq_weights: point set is not unisolvent for the basis "
                    "(alternant matrix is rank-deficient)");

  const Eigen::MatrixXd v = alternant_matrix(basis, points);
  BsqCore core;
  core.qr_vt.compute(v.transpose());

  const Eigen::VectorXd phi_bar = basis_mean(basis);
  const Eigen::MatrixXd lambda = basis_outer_expectation(basis);
  const Eigen::MatrixXd x_cross = cross_expectation_x_basis(basis);

  TransformWeights& w = core.weights;
  w.points = points;
  w.w_mean = core.qr_vt.solve(phi_bar);
  // W_c = V^-T Lambda V^-1, evaluated as V^-T (V^-T Lambda)^T.
  const Eigen::MatrixXd vt_lambda = core.qr_vt.solve(lambda);
  w.w_cov = core.qr_vt.solve(vt_lambda.transpose()).transpose();
  w.w_cov = 0.5 * (w.w_cov + w.w_cov.transpose()).eval();
  w.w_cross = core.qr_vt.solve(x_cross.transpose()).transpose();
  w.emv = Eigen::VectorXd::Zero(1);
  return core;
}

double bsq_emv(const BsqCore& core, const UnitSigmaPointSet& points,
               const MultiIndexBasis& basis, const RbfParams& kernel) {
  if (kernel.dim() != points.dim)
    throw DimensionError("bsq_weights: kernel dimension does not match points");
  const Eigen::MatrixXd omega =
      kernel_poly_cross_expectation(kernel, points, basis);
  const Eigen::MatrixXd gram = gram_matrix_raw(kernel, points);
  const double diag_term = kernel_diag_expectation(kernel);
  const double omega_term = core.qr_vt.solve(omega.transpose()).trace();
  const double cov_term = core.weights.w_cov.cwiseProduct(gram).sum();
  const double emv = diag_term - 2.0 * omega_term + cov_term;
  if (emv < -kEmvRoundoffTol)
    throw NumericalError(
        "bsq_weights: expected model variance " + std::to_string(emv) +
        " is negative beyond roundoff; kernel and point set are inconsistent");
  return std::max(emv, 0.0);
}

}  // namespace

TransformWeights classical_weights(const UnitSigmaPointSet& points) {
  check_point_set(points, "classical_weights");
  TransformWeights w;
  w.points = points;
  w.w_mean = points.weights;
  w.w_cov = Eigen::MatrixXd(points.weights.asDiagonal());
  w.w_cross = points.points * points.weights.asDiagonal();
  w.emv = Eigen::VectorXd::Zero(1);
  return w;
}

TransformWeights bsq_weights(const UnitSigmaPointSet& points,
                             const MultiIndexBasis& basis,
                             const RbfParams& kernel) {
  BsqCore core = bsq_core(points, basis);
  core.weights.emv = Eigen::VectorXd::Constant(
      1, bsq_emv(core, points, basis, kernel));
  return std::move(core.weights);
}

TransformWeights bsq_weights(const UnitSigmaPointSet& points,
                             const MultiIndexBasis& basis,
                             const std::vector<RbfParams>& kernels) {
  if (kernels.empty())
    throw std::invalid_argument("bsq_weights: need at least one kernel");
  BsqCore core = bsq_core(points, basis);
  Eigen::VectorXd emv(static_cast<Eigen::Index>(kernels.size()));
  for (std::size_t e = 0; e < kernels.size(); ++e)
    emv(static_cast<Eigen::Index>(e)) = bsq_emv(core, points, basis, kernels[e]);
  core.weights.emv = std::move(emv);
  return std::move(core.weights);
}

TransformWeights bsq_weights_agnostic(const UnitSigmaPointSet& points,
                                      const MultiIndexBasis& basis,
                                      const Eigen::VectorXd& emv) {
  if (emv.size() == 0 || !(emv.array() >= 0.0).all())
    throw std::invalid_argument(
        "bsq_weights_agnostic: expected model variance entries must be >= 0");
  BsqCore core = bsq_core(points, basis);
  core.weights.emv = emv;
  return std::move(core.weights);
}

GaussianMoments apply_transform(const TransformWeights& weights, const VectorFn& f,
                                const Eigen::Ref<const Eigen::VectorXd>& mean,
                                const Eigen::Ref<const Eigen::MatrixXd>& cov) {
  const Eigen::Index dim = weights.points.dim;
  if (mean.size() != dim || cov.rows() != dim || cov.cols() != dim)
    throw DimensionError("apply_transform: input moments do not match the "
                         "sigma-point dimension");

  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success)
    throw NumericalError(
        "apply_transform: input covariance is not positive definite");
  const Eigen::MatrixXd root = llt.matrixL();

  const Eigen::Index n = weights.points.count();
  Eigen::MatrixXd evals;  // N x E
  Eigen::Index out_dim = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = mean + root * weights.points.points.col(i);
    const Eigen::VectorXd g = f(x);
    if (i == 0) {
      out_dim = g.size();
      if (out_dim < 1)
        throw DimensionError("apply_transform: integrand returned empty output");
      evals.resize(n, out_dim);
    } else if (g.size() != out_dim) {
      throw DimensionError("apply_transform: integrand output dimension varies");
    }
    if (!g.allFinite())
      throw IntegrandError("apply_transform: non-finite integrand value at "
                           "sigma-point " + std::to_string(i));
    evals.row(i) = g.transpose();
  }

  GaussianMoments out;
  out.mean = evals.transpose() * weights.w_mean;
  Eigen::MatrixXd covariance =
      evals.transpose() * weights.w_cov * evals - out.mean * out.mean.transpose();
  covariance = 0.5 * (covariance + covariance.transpose()).eval();
  if (weights.emv.size() == 1) {
    covariance.diagonal().array() += weights.emv(0);
  } else if (weights.emv.size() == out_dim) {
    covariance.diagonal() += weights.emv;
  } else {
    throw DimensionError("apply_transform: emv has " +
                         std::to_string(weights.emv.size()) +
                         " entries for an output of dimension " +
                         std::to_string(out_dim));
  }
  out.cov = std::move(covariance);
  out.cross = root * (weights.w_cross * evals);
  return out;
}

double bsq_integral_variance(const UnitSigmaPointSet& points,
                             const MultiIndexBasis& basis,
                             const RbfParams& kernel) {
  BsqCore core = bsq_core(points, basis);
  if (kernel.dim() != points.dim)
    throw DimensionError("bsq_integral_variance: kernel dimension mismatch");
  const Eigen::VectorXd k_bar = kernel_point_expectations(kernel, points);
  const Eigen::MatrixXd gram = gram_matrix_raw(kernel, points);
  const Eigen::VectorXd& w = core.weights.w_mean;
  const double variance = kernel_double_expectation(kernel) -
                          2.0 * k_bar.dot(w) + w.dot(gram * w);
  const double tol = kEmvRoundoffTol * kernel.scale * kernel.scale;
  if (variance < -tol)
    throw NumericalError("bsq_integral_variance: negative variance " +
                         std::to_string(variance));
  return std::max(variance, 0.0);
}

}  // namespace bsq
