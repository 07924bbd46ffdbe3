#include <benchmark/benchmark.h>

#include "tradelab/diff/autodiff.hpp"
#include "tradelab/diff/net.hpp"
#include "tradelab/random.hpp"

namespace {

using namespace tradelab::diff;

void BM_ForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const NetSpec spec{100, {width, width}, 1, Head::linear};
  const auto params = init(spec, 1);
  tradelab::Rng rng(2);
  const Mat x = rng.normal_matrix(32, 100);
  const Mat y = rng.normal_matrix(32, 1);
  for (auto _ : state) {
    const auto vars = as_parameters(params);
    const Var loss = mean(square(forward(spec, vars, constant(x)) - constant(y)));
    benchmark::DoNotOptimize(grad(loss, vars));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

// One differentiable SGD step followed by a gradient through it.
void BM_SecondOrder(benchmark::State& state) {
  const NetSpec spec{100, {64, 64}, 1, Head::linear};
  const auto params = init(spec, 1);
  tradelab::Rng rng(3);
  const Mat x1 = rng.normal_matrix(32, 100), y1 = rng.normal_matrix(32, 1);
  const Mat x2 = rng.normal_matrix(32, 100), y2 = rng.normal_matrix(32, 1);
  for (auto _ : state) {
    const auto vars = as_parameters(params);
    const auto g = grad(mean(square(forward(spec, vars, constant(x1)) - constant(y1))), vars, true);
    std::vector<Var> fast;
    for (std::size_t k = 0; k < vars.size(); ++k) fast.push_back(sub(vars[k], scale(g[k], 1e-3)));
    benchmark::DoNotOptimize(grad(mean(square(forward(spec, fast, constant(x2)) - constant(y2))), vars));
  }
}
BENCHMARK(BM_SecondOrder);

}  // namespace
