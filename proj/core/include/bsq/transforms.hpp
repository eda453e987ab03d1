#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "bsq/kernels.hpp"
#include "bsq/poly_basis.hpp"
#include "bsq/sigma_points.hpp"

namespace bsq {

/// Precomputed moment-transform weights.
///
/// `w_mean` sums to one; `w_cov` is symmetric PSD; `w_cross` maps integrand
/// evaluations to the input-output cross-covariance. `emv` is the expected
/// model variance added to the transformed covariance diagonal: either one
/// entry broadcast over all outputs or one entry per output.
struct TransformWeights {
  UnitSigmaPointSet points;
  Eigen::VectorXd w_mean;   // N
  Eigen::MatrixXd w_cov;    // N x N
  Eigen::MatrixXd w_cross;  // D x N
  Eigen::VectorXd emv;      // length 1 or E
};

/// (mean, covariance, input-output cross-covariance) of a Gaussian.
/// `cross` is empty when not produced.
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd cross;
};

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Classical sigma-point weights: w_cov = diag(w), w_cross = Xi diag(w),
/// zero expected model variance.
TransformWeights classical_weights(const UnitSigmaPointSet& points);

/// Bayes-Sard weights for a square (N = Q) unisolvent system with an RBF
/// kernel: mean weights solve V^T w = E[v], covariance weights are
/// V^-T E[v v^T] V^-1, cross weights E[xi v^T] V^-1, and emv is the expected
/// model variance of the posterior process.
TransformWeights bsq_weights(const UnitSigmaPointSet& points,
                             const MultiIndexBasis& basis,
                             const RbfParams& kernel);

/// Per-output kernels; produces one emv entry per output, identical
/// weight matrices.
TransformWeights bsq_weights(const UnitSigmaPointSet& points,
                             const MultiIndexBasis& basis,
                             const std::vector<RbfParams>& kernels);

/// Kernel-agnostic variant: identical weights with the expected model
/// variance supplied directly (entries >= 0, length 1 or E).
TransformWeights bsq_weights_agnostic(const UnitSigmaPointSet& points,
                                      const MultiIndexBasis& basis,
                                      const Eigen::VectorXd& emv);

/// Propagates N(mean, cov) through f: evaluates f at mean + sqrt(cov)*xi_n,
/// forms output mean/covariance/cross-covariance, adds emv to the covariance
/// diagonal, and symmetrizes the covariance.
GaussianMoments apply_transform(const TransformWeights& weights, const VectorFn& f,
                                const Eigen::Ref<const Eigen::VectorXd>& mean,
                                const Eigen::Ref<const Eigen::MatrixXd>& cov);

/// Posterior variance of the scalar integral E[g(xi)] under the Bayes-Sard
/// model; diagnostic companion to the transform.
double bsq_integral_variance(const UnitSigmaPointSet& points,
                             const MultiIndexBasis& basis,
                             const RbfParams& kernel);

}  // namespace bsq
