// Serial versus OpenMP timings for the data-parallel kernels: the brute-force
// QP oracle, the capacity sweep and the noise study.

#include <benchmark/benchmark.h>

#include "cesim/metrics.hpp"
#include "cesim/qpsolve.hpp"
#include "cesim/rng.hpp"
#include "cesim/scenario.hpp"

namespace {

cesim::qp::QpProblem grid_problem() {
  using namespace cesim;
  const int n = 4;
  qp::QpProblem p = qp::QpProblem::unconstrained(
      Eigen::MatrixXd::Identity(n, n) * 2.0, Eigen::VectorXd::Zero(n));
  rng gen(11);
  for (int i = 0; i < n; ++i) p.c[i] = gen.uniform(-1.0, 1.0);
  p.lo = Eigen::VectorXd::Constant(n, -1.0);
  p.hi = Eigen::VectorXd::Constant(n, 1.0);
  return p;
}

cesim::scenario::Scenario small_scenario() {
  cesim::scenario::SynthesisSpec spec;
  spec.seed = 5;
  spec.households = 20;
  spec.participation = 0.4;
  return cesim::scenario::synthesize(spec);
}

void bench_brute_force(benchmark::State& state, cesim::exec mode) {
  const cesim::qp::QpProblem p = grid_problem();
  cesim::set_default_exec(mode);
  for (auto _ : state) {
    auto result = cesim::qp::brute_force_grid(p, 0.02);
    benchmark::DoNotOptimize(result);
  }
}

void bench_sweep(benchmark::State& state, cesim::exec mode) {
  const cesim::scenario::Scenario s = small_scenario();
  const std::vector<double> capacities = {20.0, 40.0, 60.0, 80.0};
  const std::vector<cesim::Model> models = {cesim::Model::competitive,
                                            cesim::Model::benevolent};
  for (auto _ : state) {
    auto points =
        cesim::metrics::capacity_sweep(s, capacities, models, 0.002, mode);
    benchmark::DoNotOptimize(points);
  }
}

void bench_noise(benchmark::State& state, cesim::exec mode) {
  const cesim::scenario::Scenario s = small_scenario();
  for (auto _ : state) {
    auto rows = cesim::metrics::noise_study(s, {0.0, 25.0}, 4, 17, 0.002, mode);
    benchmark::DoNotOptimize(rows);
  }
}

}  // namespace

BENCHMARK_CAPTURE(bench_brute_force, serial, cesim::exec::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_brute_force, openmp, cesim::exec::omp)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_sweep, serial, cesim::exec::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_sweep, openmp, cesim::exec::omp)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_noise, serial, cesim::exec::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_noise, openmp, cesim::exec::omp)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
