#include "bsq/sigma_points.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "bsq/errors.hpp"

namespace bsq {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_dim(int dim) {
  if (dim < 1) throw DimensionError("sigma points: dimension must be >= 1");
}

}  // namespace

double hermite_probabilists(int n, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

UnitSigmaPointSet ut_points(int dim, double kappa) {
  check_dim(dim);
  const double c = dim + kappa;
  if (!(c > 0.0))
    throw std::invalid_argument("ut_points: kappa must exceed -dim (got kappa=" +
                                std::to_string(kappa) + ", dim=" +
                                std::to_string(dim) + ")");
  const Eigen::Index n = 2 * dim + 1;
  UnitSigmaPointSet set;
  set.dim = dim;
  set.points = Eigen::MatrixXd::Zero(dim, n);
  set.weights = Eigen::VectorXd::Constant(n, 1.0 / (2.0 * c));
  set.weights(0) = kappa / c;
  const double r = std::sqrt(c);
  for (int d = 0; d < dim; ++d) {
    set.points(d, 1 + d) = r;
    set.points(d, 1 + dim + d) = -r;
  }
  return set;
}

UnitSigmaPointSet spherical_radial_points(int dim) {
  check_dim(dim);
  UnitSigmaPointSet full = ut_points(dim, 0.0);
  UnitSigmaPointSet set;
  set.dim = dim;
  set.points = full.points.rightCols(2 * dim);
  set.weights = full.weights.tail(2 * dim);
  return set;
}

GaussHermite1d gh_points_1d(int order) {
  if (order < 1) throw std::invalid_argument("gh_points_1d: order must be >= 1");
  const int p = order;

  GaussHermite1d rule;
  rule.roots = Eigen::VectorXd::Zero(p);
  rule.weights = Eigen::VectorXd::Zero(p);
  if (p == 1) {
    rule.weights(0) = 1.0;
    return rule;
  }

  // Golub-Welsch: eigenvalues of the Jacobi matrix (zero diagonal,
  // off-diagonal sqrt(k)) are the He_p roots.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sub(p - 1);
  for (int k = 1; k < p; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  Eigen::VectorXd roots = solver.eigenvalues();

  // One Newton step per root: He_p'(x) = p He_{p-1}(x).
  for (int i = 0; i < p; ++i) {
    const double x = roots(i);
    const double fp = p * hermite_probabilists(p - 1, x);
    if (fp != 0.0) roots(i) -= hermite_probabilists(p, x) / fp;
  }

  // Enforce exact +/- pairing; the rule is symmetric by construction.
  for (int i = 0; i < p / 2; ++i) {
    const double m = 0.5 * (std::abs(roots(i)) + std::abs(roots(p - 1 - i)));
    roots(i) = -m;
    roots(p - 1 - i) = m;
  }
  if (p % 2 == 1) roots((p - 1) / 2) = 0.0;

  const double num = factorial(p);
  for (int i = 0; i < p; ++i) {
    const double h = hermite_probabilists(p - 1, roots(i));
    rule.weights(i) = num / (static_cast<double>(p) * p * h * h);
  }
  rule.roots = roots;
  return rule;
}

UnitSigmaPointSet gh_points(int dim, int order, std::size_t point_cap) {
  check_dim(dim);
  if (order < 1) throw std::invalid_argument("gh_points: order must be >= 1");

  std::size_t count = 1;
  for (int d = 0; d < dim; ++d) {
    count *= static_cast<std::size_t>(order);
    if (count > point_cap)
      throw SizeError("gh_points: tensor grid " + std::to_string(order) + "^" +
                      std::to_string(dim) + " exceeds the cap of " +
                      std::to_string(point_cap) +
                      " points; the rule grows exponentially with dimension");
  }

  const GaussHermite1d rule = gh_points_1d(order);
  UnitSigmaPointSet set;
  set.dim = dim;
  set.points.resize(dim, static_cast<Eigen::Index>(count));
  set.weights.resize(static_cast<Eigen::Index>(count));
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t rest = n;
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      const int idx = static_cast<int>(rest % static_cast<std::size_t>(order));
      rest /= static_cast<std::size_t>(order);
      set.points(d, static_cast<Eigen::Index>(n)) = rule.roots(idx);
      w *= rule.weights(idx);
    }
    set.weights(static_cast<Eigen::Index>(n)) = w;
  }
  return set;
}

}  // namespace bsq
