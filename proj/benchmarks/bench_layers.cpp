#include <benchmark/benchmark.h>

#include "flaudit/rng.hpp"
#include "flaudit/schemes.hpp"

using namespace flaudit;

namespace {

struct ConvFixture {
  ConvSpec spec;
  Tensor x;
  std::vector<Tensor> filters;
  Tensor grad_y;

  explicit ConvFixture(size_t alpha_x) {
    spec = ConvSpec{16, 8, 2, alpha_x, 0.01};
    Rng rng(alpha_x);
    x = Tensor::zeros({alpha_x, alpha_x});
    for (auto& v : x.values) v = rng.uniform(-1.0, 1.0);
    for (size_t t = 0; t < spec.n_f; t++) {
      Tensor f = Tensor::zeros({8, 8});
      for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
      filters.push_back(std::move(f));
    }
    size_t ay = conv_output_dim(spec);
    grad_y = Tensor::zeros({spec.n_f, ay, ay});
    for (auto& v : grad_y.values) v = rng.uniform(-1.0, 1.0);
  }
};

}  // namespace

static void BM_ConvForward(benchmark::State& state) {
  ConvFixture fx(size_t(state.range(0)));
  for (auto _ : state) {
    Tensor y = conv_forward(fx.spec, fx.x, fx.filters);
    benchmark::DoNotOptimize(y.values.data());
  }
}
BENCHMARK(BM_ConvForward)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

static void BM_ConvBackward(benchmark::State& state) {
  ConvFixture fx(size_t(state.range(0)));
  for (auto _ : state) {
    ConvBackward bwd = conv_backward(fx.spec, fx.x, fx.filters, fx.grad_y);
    benchmark::DoNotOptimize(bwd.grad_x.values.data());
  }
}
BENCHMARK(BM_ConvBackward)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

static void BM_ConvBackwardTrees(benchmark::State& state) {
  ConvFixture fx(size_t(state.range(0)));
  ConvBackward bwd = conv_backward(fx.spec, fx.x, fx.filters, fx.grad_y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        group_commit(collect_grad_x_leaves(fx.spec, bwd.grad_x_per_filter)).root());
    benchmark::DoNotOptimize(
        group_commit(collect_grad_f_leaves(fx.spec, bwd)).root());
    benchmark::DoNotOptimize(
        group_commit(collect_y_row_leaves(fx.grad_y)).root());
    benchmark::DoNotOptimize(
        group_commit(collect_x_group_leaves(fx.spec, fx.x)).root());
  }
}
BENCHMARK(BM_ConvBackwardTrees)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

static void BM_FcPartials(benchmark::State& state) {
  size_t l_x = size_t(state.range(0));
  FcSpec spec{l_x, 64, 0.01};
  Rng rng(l_x);
  Tensor theta = Tensor::zeros({l_x, 64});
  for (auto& v : theta.values) v = rng.uniform(-0.5, 0.5);
  std::vector<double> x(l_x);
  for (auto& v : x) v = rng.uniform();
  FcSplit split = fc_layout(l_x);
  for (auto _ : state) {
    Tensor partials = fc_partials(spec, theta, x, split);
    for (size_t i = 0; i < spec.l_y; i++) {
      benchmark::DoNotOptimize(fold_row(partials, i));
    }
  }
}
BENCHMARK(BM_FcPartials)->RangeMultiplier(4)->Range(64, 4096);

static void BM_FcThetaGroupTree(benchmark::State& state) {
  size_t l_x = size_t(state.range(0));
  Rng rng(l_x);
  Tensor theta = Tensor::zeros({l_x, 64});
  for (auto& v : theta.values) v = rng.uniform(-0.5, 0.5);
  FcSplit split = fc_layout(l_x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_theta_groups_tree(theta, split).root());
  }
}
BENCHMARK(BM_FcThetaGroupTree)->RangeMultiplier(4)->Range(64, 4096);
