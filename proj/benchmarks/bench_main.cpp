#include <benchmark/benchmark.h>

#include <cmath>

#include "tspc/optimizer.hpp"
#include "tspc/orbital.hpp"
#include "tspc/static_tsp.hpp"

using namespace tspc;
using Eigen::VectorXd;

namespace {

void BM_EvaluateStaticSequence(benchmark::State& state) {
  const auto pts = static_tsp::PointSet::benchmark();
  const auto bp = static_tsp::build_static_problem(pts, engine::ObjectiveMode::chi_square);
  const auto x = static_tsp::seeded_design(static_tsp::solution_a_route(), pts, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(bp.evaluate(x).objective);
}
BENCHMARK(BM_EvaluateStaticSequence);

void BM_FdGradientStatic(benchmark::State& state) {
  const auto pts = static_tsp::PointSet::benchmark();
  const auto bp = static_tsp::build_static_problem(pts, engine::ObjectiveMode::chi_square);
  const auto x = static_tsp::seeded_design(static_tsp::solution_a_route(), pts, 0, 0);
  const optimizer::Objective f = [&](const VectorXd& v) { return bp.objective(v); };
  const double fx = f(x);
  const VectorXd steps = VectorXd::Constant(x.size(), 1e-6);
  const optimizer::Bounds box{bp.layout().lower_bounds(), bp.layout().upper_bounds()};
  for (auto _ : state) benchmark::DoNotOptimize(optimizer::fd_gradient(f, x, fx, steps, box));
}
BENCHMARK(BM_FdGradientStatic);

void BM_HeldKarp(benchmark::State& state) {
  const auto pts = static_tsp::PointSet::benchmark();
  for (auto _ : state) benchmark::DoNotOptimize(static_tsp::held_karp_optimal(pts, 13).length);
}
BENCHMARK(BM_HeldKarp)->Unit(benchmark::kMillisecond);

void BM_TransferCost(benchmark::State& state) {
  orbital::OrbitalElements from;
  from.a = 7131.6;
  from.e = 0.001;
  from.i = orbital::deg2rad(98.4);
  from.raan = orbital::deg2rad(40.0);
  from.epoch = 23557.0;
  auto to = from;
  to.a += 35.0;
  to.raan += orbital::deg2rad(3.0);
  for (auto _ : state) benchmark::DoNotOptimize(orbital::transfer_cost(from, to, 20.0).dv_total);
}
BENCHMARK(BM_TransferCost);

}  // namespace

BENCHMARK_MAIN();
