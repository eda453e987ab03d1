#pragma once

#include <vector>

#include <Eigen/Core>

#include "bsq/sigma_points.hpp"

namespace bsq {

/// Monomial exponent vector alpha in N_0^D.
struct MultiIndex {
  std::vector<int> exponents;

  int dim() const { return static_cast<int>(exponents.size()); }
  int total_degree() const;
  bool operator==(const MultiIndex&) const = default;
};

/// Ordered list of Q distinct multi-indices spanning a monomial space.
struct MultiIndexBasis {
  int dim = 0;
  std::vector<MultiIndex> indices;

  Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
};

/// Basis {1, x_1..x_D, x_1^2..x_D^2}; Q = 2D+1, ordered to match ut_points.
MultiIndexBasis ut_basis(int dim);

/// All alpha with max_d alpha_d <= order-1; Q = order^dim, ordered so the
/// first axis' exponent varies fastest (matching gh_points).
MultiIndexBasis gh_max_degree_basis(int dim, int order,
                                    std::size_t cap = kDefaultPointCap);

/// Evaluates every basis monomial at x (0^0 = 1).
Eigen::VectorXd eval_basis(const MultiIndexBasis& basis,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

/// N x Q alternant matrix with entry (n, q) = phi_q(xi_n).
Eigen::MatrixXd alternant_matrix(const MultiIndexBasis& basis,
                                 const UnitSigmaPointSet& points);

/// True iff the smallest singular value of the alternant exceeds
/// tol * largest singular value.
bool is_unisolvent(const MultiIndexBasis& basis, const UnitSigmaPointSet& points,
                   double tol = 1e-10);

/// (n-1)!! for even n, 0 for odd n: the n-th raw moment of N(0, 1).
double gaussian_moment_1d(int n);

/// E[xi^alpha] for xi ~ N(0, I): product of 1-D moments.
double gaussian_monomial_moment(const MultiIndex& alpha);

/// E[v(xi)] entrywise over the basis monomials.
Eigen::VectorXd basis_mean(const MultiIndexBasis& basis);

/// Q x Q matrix E[v(xi) v(xi)^T]; symmetric positive semi-definite.
Eigen::MatrixXd basis_outer_expectation(const MultiIndexBasis& basis);

/// D x Q matrix E[xi v(xi)^T]: entry (d, q) is the Gaussian moment of the
/// augmented index alpha_q + e_d.
Eigen::MatrixXd cross_expectation_x_basis(const MultiIndexBasis& basis);

}  // namespace bsq
