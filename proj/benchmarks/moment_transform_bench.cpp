#include <benchmark/benchmark.h>

#include <cmath>

#include "bsq/filtering.hpp"
#include "bsq/models.hpp"
#include "bsq/transforms.hpp"

using namespace bsq;

namespace {

void BM_UtWeights(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(classical_weights(ut_points(dim, 2.0)));
}
BENCHMARK(BM_UtWeights)->Arg(1)->Arg(5)->Arg(20);

void BM_BsqWeightsUt(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto points = ut_points(dim, 2.0);
  const auto basis = ut_basis(dim);
  const auto kernel = RbfParams::isotropic(dim, 1.0, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(bsq_weights(points, basis, kernel));
}
BENCHMARK(BM_BsqWeightsUt)->Arg(1)->Arg(5)->Arg(10);

void BM_BsqWeightsGh(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  const auto points = gh_points(2, order);
  const auto basis = gh_max_degree_basis(2, order);
  const auto kernel = RbfParams::isotropic(2, 1.0, 0.8);
  for (auto _ : state)
    benchmark::DoNotOptimize(bsq_weights(points, basis, kernel));
}
BENCHMARK(BM_BsqWeightsGh)->Arg(3)->Arg(5)->Arg(7);

void BM_ApplyTransformReentry(benchmark::State& state) {
  const StateSpaceModel model = reentry_filter_model();
  const auto weights = bsq_weights_agnostic(
      ut_points(5, 0.0), ut_basis(5), Eigen::VectorXd::Constant(1, 2e-4));
  const auto f = [&](const Eigen::VectorXd& x) { return model.dynamics(x, 1); };
  const Eigen::VectorXd mean = model.init.mean;
  const Eigen::MatrixXd cov = model.init.cov;
  for (auto _ : state)
    benchmark::DoNotOptimize(apply_transform(weights, f, mean, cov));
}
BENCHMARK(BM_ApplyTransformReentry);

void BM_UngmFilterStep(benchmark::State& state) {
  const StateSpaceModel model = ungm_model();
  const auto weights = classical_weights(ut_points(1, 2.0));
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.3);
  FilterState current{0, model.init};
  for (auto _ : state) {
    const GaussianMoments prior = predict(model, weights, current);
    benchmark::DoNotOptimize(update(model, weights, prior, y, current.k + 1));
  }
}
BENCHMARK(BM_UngmFilterStep);

}  // namespace

BENCHMARK_MAIN();
