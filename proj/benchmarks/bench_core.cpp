#include <benchmark/benchmark.h>

#include <random>

#include "carnot/checks.hpp"
#include "carnot/dirichlet.hpp"
#include "carnot/maximal.hpp"
#include "carnot/model.hpp"

using namespace carnot;

namespace {

std::vector<Vec3> random_points(size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {U(rng), U(rng), U(rng)};
  return pts;
}

void BM_ComposeGauge(benchmark::State& state) {
  const auto pts = random_points(1024);
  double acc = 0.0;
  for (auto _ : state) {
    for (size_t n = 0; n + 1 < pts.size(); ++n) acc += h1::gauge(h1::compose(h1::inverse(pts[n]), pts[n + 1]));
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * (pts.size() - 1));
}
BENCHMARK(BM_ComposeGauge);

void BM_FundamentalSolution(benchmark::State& state) {
  const FundamentalSolution G(sample_matrices(1, 0.5, 1).back());
  const auto pts = random_points(1024);
  double acc = 0.0;
  for (auto _ : state) {
    for (const auto& p : pts) acc += G(p);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * pts.size());
}
BENCHMARK(BM_FundamentalSolution);

void BM_ModelApplyGrid(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  const GridSpec g = GridSpec::cells(Box{{-1.2, -1.2, -0.6}, {1.2, 1.2, 0.6}}, cells);
  const auto u = SampledFunction::sample(g, [](const Vec3& p) { return std::exp(-h1::gauge4(p)); });
  const auto a = sample_matrices(1, 0.5, 1).back();
  for (auto _ : state) benchmark::DoNotOptimize(model_apply(a, u));
  state.SetItemsProcessed(state.iterations() * g.size());
}
BENCHMARK(BM_ModelApplyGrid)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DirichletSolve(benchmark::State& state) {
  const Ball ball{{0, 0, 0}, 1.0};
  const auto a = sample_matrices(1, 0.5, 1).back();
  const GridSpec g = group_lattice_grid(ball, static_cast<int>(state.range(0)));
  const auto prob = DiscreteDirichletProblem::make(ball, a, g, corpus::gauge_bump(1.3));
  int iters = 0;
  for (auto _ : state) {
    auto s = solve_dirichlet(prob);
    iters = s.diagnostics.iterations;
    benchmark::DoNotOptimize(s);
  }
  state.counters["cg_iterations"] = iters;
}
BENCHMARK(BM_DirichletSolve)->Arg(24)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_HLMaximalPoint(benchmark::State& state) {
  const GridSpec g = GridSpec::cells(Box{{-1.5, -1.5, -0.8}, {1.5, 1.5, 0.8}}, 48);
  const auto f = SampledFunction::sample(g, [](const Vec3& p) { return std::exp(-h1::gauge4(p)); });
  MaximalConfig cfg{BallLattice::geometric(0.1, 0.5, 0.1), 2.0, {2.0}};
  for (auto _ : state) benchmark::DoNotOptimize(hl_maximal(f, {0.1, 0.0, 0.0}, cfg));
}
BENCHMARK(BM_HLMaximalPoint)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
