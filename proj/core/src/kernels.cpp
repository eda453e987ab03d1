#include "bsq/kernels.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "bsq/errors.hpp"
#include "bsq/rng.hpp"

namespace bsq {

namespace {

void check_params(const RbfParams& params, const char* where) {
  if (!(params.scale > 0.0))
    throw std::invalid_argument(std::string(where) + ": kernel scale must be > 0");
  if (params.lengthscales.size() == 0 ||
      !(params.lengthscales.array() > 0.0).all())
    throw std::invalid_argument(std::string(where) +
                                ": lengthscales must all be > 0");
}

std::vector<double> factorial_table(int max_n) {
  std::vector<double> f(static_cast<std::size_t>(max_n) + 1, 1.0);
  for (int i = 2; i <= max_n; ++i)
    f[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i - 1)] * i;
  return f;
}

// E[(m + s u)^a] for u ~ N(0, 1).
double shifted_moment(int a, double m, double s, const std::vector<double>& fact) {
  double total = 0.0;
  double s2j = 1.0;  // s^{2j}
  for (int j = 0; 2 * j <= a; ++j) {
    const double coef = fact[static_cast<std::size_t>(a)] /
                        (std::ldexp(1.0, j) * fact[static_cast<std::size_t>(j)] *
                         fact[static_cast<std::size_t>(a - 2 * j)]);
    double mpow = 1.0;
    for (int i = 0; i < a - 2 * j; ++i) mpow *= m;
    total += coef * s2j * mpow;
    s2j *= s * s;
  }
  return total;
}

}  // namespace

RbfParams RbfParams::isotropic(int dim, double scale, double lengthscale) {
  RbfParams p;
  p.scale = scale;
  p.lengthscales = Eigen::VectorXd::Constant(dim, lengthscale);
  return p;
}

double rbf_eval(const RbfParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_params(params, "rbf_eval");
  if (x.size() != params.dim() || y.size() != params.dim())
    throw DimensionError("rbf_eval: input dimension does not match lengthscales");
  const Eigen::ArrayXd diff = (x - y).array() / params.lengthscales.array();
  return params.scale * params.scale * std::exp(-0.5 * diff.square().sum());
}

Eigen::MatrixXd gram_matrix_raw(const RbfParams& params,
                                const UnitSigmaPointSet& points) {
  check_params(params, "gram_matrix");
  if (points.dim != params.dim())
    throw DimensionError("gram_matrix: point dimension does not match kernel");
  const Eigen::Index n = points.count();
  Eigen::MatrixXd k(n, n);
  const double s2 = params.scale * params.scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = s2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = rbf_eval(params, points.points.col(i), points.points.col(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

GramMatrix gram_matrix(const RbfParams& params, const UnitSigmaPointSet& points) {
  GramMatrix out;
  out.values = gram_matrix_raw(params, points);
  const double s2 = params.scale * params.scale;
  const Eigen::Index n = out.values.rows();

  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd attempt = out.values;
    attempt.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(attempt);
    if (llt.info() == Eigen::Success) {
      out.values = attempt;
      out.chol_lower = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
    if (jitter == 0.0) {
      jitter = 1e-12 * s2;
    } else if (jitter < 1e-8 * s2) {
      jitter = std::min(jitter * 10.0, 1e-8 * s2);
    } else {
      throw NumericalError(
          "gram_matrix: Cholesky failed for " + std::to_string(n) +
          " points even with jitter 1e-8*scale^2; kernel columns are "
          "numerically dependent");
    }
  }
}

double kernel_diag_expectation(const RbfParams& params) {
  check_params(params, "kernel_diag_expectation");
  return params.scale * params.scale;
}

double kernel_double_expectation(const RbfParams& params) {
  check_params(params, "kernel_double_expectation");
  double prod = 1.0;
  for (int d = 0; d < params.dim(); ++d) {
    const double l = params.lengthscales(d);
    prod *= l / std::sqrt(l * l + 2.0);
  }
  return params.scale * params.scale * prod;
}

Eigen::VectorXd kernel_point_expectations(const RbfParams& params,
                                          const UnitSigmaPointSet& points) {
  check_params(params, "kernel_point_expectations");
  if (points.dim != params.dim())
    throw DimensionError("kernel_point_expectations: dimension mismatch");
  Eigen::VectorXd out(points.count());
  for (Eigen::Index n = 0; n < points.count(); ++n) {
    double lin = 1.0;
    double log_exp = 0.0;
    for (int d = 0; d < points.dim; ++d) {
      const double l = params.lengthscales(d);
      const double t = 1.0 + l * l;
      const double x = points.points(d, n);
      lin *= l / std::sqrt(t);
      log_exp -= x * x / (2.0 * t);
    }
    // Scale multiplies last so it factors out of the result exactly.
    out(n) = lin * std::exp(log_exp) * (params.scale * params.scale);
  }
  return out;
}

Eigen::MatrixXd kernel_poly_cross_expectation(const RbfParams& params,
                                              const UnitSigmaPointSet& points,
                                              const MultiIndexBasis& basis) {
  check_params(params, "kernel_poly_cross_expectation");
  if (points.dim != params.dim() || basis.dim != points.dim)
    throw DimensionError("kernel_poly_cross_expectation: dimension mismatch");

  int max_exp = 0;
  for (const auto& idx : basis.indices)
    for (int e : idx.exponents) max_exp = std::max(max_exp, e);
  const std::vector<double> fact = factorial_table(max_exp);

  const double s2 = params.scale * params.scale;
  Eigen::MatrixXd out(points.count(), basis.size());
  for (Eigen::Index n = 0; n < points.count(); ++n) {
    for (Eigen::Index q = 0; q < basis.size(); ++q) {
      const auto& exps = basis.indices[static_cast<std::size_t>(q)].exponents;
      double lin = 1.0;
      double log_exp = 0.0;
      for (int d = 0; d < points.dim; ++d) {
        const double l = params.lengthscales(d);
        const double t = 1.0 + l * l;
        const double s = l / std::sqrt(t);
        const double x = points.points(d, n);
        const double m = x / t;
        lin *= s * shifted_moment(exps[d], m, s, fact);
        log_exp -= x * x / (2.0 * t);
      }
      // Scale multiplies last so it factors out of the result exactly.
      out(n, q) = lin * std::exp(log_exp) * s2;
    }
  }
  return out;
}

McEstimate mc_expectation_oracle(
    const std::function<double(const Eigen::VectorXd&)>& integrand, int dim,
    std::int64_t samples, std::uint64_t seed) {
  if (dim < 1)
    throw DimensionError("mc_expectation_oracle: dimension must be >= 1");
  if (samples < 1000)
    throw std::invalid_argument("mc_expectation_oracle: need >= 1000 samples");

  GaussRng rng(seed);
  Eigen::VectorXd x(dim);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    for (int d = 0; d < dim; ++d) x(d) = rng.normal();
    const double v = integrand(x);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace bsq
