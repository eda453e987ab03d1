#include "bsq/poly_basis.hpp"

#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "bsq/errors.hpp"

namespace bsq {

namespace {

double int_pow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

void check_dims(const MultiIndexBasis& basis, int dim, const char* where) {
  if (basis.dim != dim)
    throw DimensionError(std::string(where) + ": basis dimension " +
                         std::to_string(basis.dim) + " does not match " +
                         std::to_string(dim));
}

}  // namespace

int MultiIndex::total_degree() const {
  return std::accumulate(exponents.begin(), exponents.end(), 0);
}

MultiIndexBasis ut_basis(int dim) {
  if (dim < 1) throw DimensionError("ut_basis: dimension must be >= 1");
  MultiIndexBasis basis;
  basis.dim = dim;
  basis.indices.reserve(2 * dim + 1);
  basis.indices.push_back(MultiIndex{std::vector<int>(dim, 0)});
  for (int power : {1, 2}) {
    for (int d = 0; d < dim; ++d) {
      MultiIndex idx{std::vector<int>(dim, 0)};
      idx.exponents[d] = power;
      basis.indices.push_back(std::move(idx));
    }
  }
  return basis;
}

MultiIndexBasis gh_max_degree_basis(int dim, int order, std::size_t cap) {
  if (dim < 1) throw DimensionError("gh_max_degree_basis: dimension must be >= 1");
  if (order < 1)
    throw std::invalid_argument("gh_max_degree_basis: order must be >= 1");
  std::size_t count = 1;
  for (int d = 0; d < dim; ++d) {
    count *= static_cast<std::size_t>(order);
    if (count > cap)
      throw SizeError("gh_max_degree_basis: " + std::to_string(order) + "^" +
                      std::to_string(dim) + " exceeds the cap of " +
                      std::to_string(cap));
  }
  MultiIndexBasis basis;
  basis.dim = dim;
  basis.indices.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t rest = n;
    MultiIndex idx{std::vector<int>(dim, 0)};
    for (int d = 0; d < dim; ++d) {
      idx.exponents[d] = static_cast<int>(rest % static_cast<std::size_t>(order));
      rest /= static_cast<std::size_t>(order);
    }
    basis.indices.push_back(std::move(idx));
  }
  return basis;
}

Eigen::VectorXd eval_basis(const MultiIndexBasis& basis,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dims(basis, static_cast<int>(x.size()), "eval_basis");
  Eigen::VectorXd out(basis.size());
  for (Eigen::Index q = 0; q < basis.size(); ++q) {
    double v = 1.0;
    const auto& exps = basis.indices[static_cast<std::size_t>(q)].exponents;
    for (int d = 0; d < basis.dim; ++d) v *= int_pow(x(d), exps[d]);
    out(q) = v;
  }
  return out;
}

Eigen::MatrixXd alternant_matrix(const MultiIndexBasis& basis,
                                 const UnitSigmaPointSet& points) {
  check_dims(basis, points.dim, "alternant_matrix");
  Eigen::MatrixXd v(points.count(), basis.size());
  for (Eigen::Index n = 0; n < points.count(); ++n)
    v.row(n) = eval_basis(basis, points.points.col(n)).transpose();
  return v;
}

bool is_unisolvent(const MultiIndexBasis& basis, const UnitSigmaPointSet& points,
                   double tol) {
  const Eigen::MatrixXd v = alternant_matrix(basis, points);
  if (v.rows() < v.cols()) return false;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v);
  const auto& sing = svd.singularValues();
  if (sing.size() == 0) return false;
  return sing(sing.size() - 1) > tol * sing(0);
}

double gaussian_moment_1d(int n) {
  if (n % 2 == 1) return 0.0;
  double m = 1.0;
  for (int k = n - 1; k > 1; k -= 2) m *= k;
  return m;
}

double gaussian_monomial_moment(const MultiIndex& alpha) {
  double m = 1.0;
  for (int e : alpha.exponents) {
    if (e % 2 == 1) return 0.0;
    m *= gaussian_moment_1d(e);
  }
  return m;
}

Eigen::VectorXd basis_mean(const MultiIndexBasis& basis) {
  Eigen::VectorXd out(basis.size());
  for (Eigen::Index q = 0; q < basis.size(); ++q)
    out(q) = gaussian_monomial_moment(basis.indices[static_cast<std::size_t>(q)]);
  return out;
}

Eigen::MatrixXd basis_outer_expectation(const MultiIndexBasis& basis) {
  const Eigen::Index q_count = basis.size();
  Eigen::MatrixXd out(q_count, q_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    for (Eigen::Index r = q; r < q_count; ++r) {
      double m = 1.0;
      for (int d = 0; d < basis.dim; ++d) {
        const int sum = basis.indices[static_cast<std::size_t>(q)].exponents[d] +
                        basis.indices[static_cast<std::size_t>(r)].exponents[d];
        if (sum % 2 == 1) {
          m = 0.0;
          break;
        }
        m *= gaussian_moment_1d(sum);
      }
      out(q, r) = m;
      out(r, q) = m;
    }
  }
  return out;
}

Eigen::MatrixXd cross_expectation_x_basis(const MultiIndexBasis& basis) {
  Eigen::MatrixXd out(basis.dim, basis.size());
  for (Eigen::Index q = 0; q < basis.size(); ++q) {
    MultiIndex augmented = basis.indices[static_cast<std::size_t>(q)];
    for (int d = 0; d < basis.dim; ++d) {
      augmented.exponents[d] += 1;
      out(d, q) = gaussian_monomial_moment(augmented);
      augmented.exponents[d] -= 1;
    }
  }
  return out;
}

}  // namespace bsq
