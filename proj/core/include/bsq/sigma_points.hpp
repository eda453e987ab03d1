#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace bsq {

/// Hard cap on generated point counts (tensor-product rules grow as p^D).
inline constexpr std::size_t kDefaultPointCap = 100000;

/// Unit sigma-point set for the standard Gaussian N(0, I).
///
/// Columns of `points` are the unit points; `weights` holds the matching
/// quadrature weights. Instances are immutable values once constructed.
struct UnitSigmaPointSet {
  int dim = 0;
  Eigen::MatrixXd points;   // dim x count
  Eigen::VectorXd weights;  // count

  Eigen::Index count() const { return points.cols(); }
};

/// Unscented-transform point set: center point first, then +sqrt(c)*e_d for
/// d = 1..D, then -sqrt(c)*e_d, with c = D + kappa.
///
/// Weights are kappa/c for the center and 1/(2c) elsewhere. Requires
/// kappa > -D so that c > 0.
UnitSigmaPointSet ut_points(int dim, double kappa);

/// Spherical-radial (cubature) set: the UT with kappa = 0 and the zero-weight
/// center point removed; 2D points of weight 1/(2D) each.
UnitSigmaPointSet spherical_radial_points(int dim);

/// One-dimensional Gauss-Hermite rule for N(0, 1).
struct GaussHermite1d {
  Eigen::VectorXd roots;    // ascending
  Eigen::VectorXd weights;  // positive, sum to 1
};

/// Roots of the probabilists' Hermite polynomial He_p with their quadrature
/// weights p! / (p^2 He_{p-1}(x)^2). Golub-Welsch eigenvalues refined by one
/// Newton step per root; exact +/- symmetry is enforced.
GaussHermite1d gh_points_1d(int order);

/// Tensor-product Gauss-Hermite set; N = order^dim points ordered so the
/// first axis' root index varies fastest. Throws SizeError above `point_cap`.
UnitSigmaPointSet gh_points(int dim, int order,
                            std::size_t point_cap = kDefaultPointCap);

/// Probabilists' Hermite polynomial He_n(x) via the three-term recurrence.
double hermite_probabilists(int n, double x);

}  // namespace bsq
