// Serial reference against the OpenMP path for the particle kernels, the
// forward filter and the replicate loop. Set OMP_NUM_THREADS to vary the
// thread count.

#include "mlsmooth/covariance.hpp"
#include "mlsmooth/kernels.hpp"
#include "mlsmooth/particle.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

namespace {

using namespace mlsmooth;

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

const LinearGaussianModel& linear_model() {
  static const LinearGaussianModel model = three_state_linear_model(100);
  return model;
}

const Trajectory& linear_data() {
  static const Trajectory traj = simulate(linear_model(), 42);
  return traj;
}

void BM_propagate(benchmark::State& state) {
  const auto M = static_cast<int>(state.range(0));
  const Matrix prev = kernels::sample_initial(linear_model(), M, 1, Exec::serial);
  std::vector<int> parents(static_cast<std::size_t>(M));
  std::iota(parents.begin(), parents.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::propagate(linear_model(), 1, prev, parents, 7, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * M);
}

void BM_measurement_loglik(benchmark::State& state) {
  const auto M = static_cast<int>(state.range(0));
  const Matrix x = kernels::sample_initial(linear_model(), M, 1, Exec::serial);
  const Vector& y = linear_data().observations[1];
  for (auto _ : state) benchmark::DoNotOptimize(kernels::measurement_loglik(linear_model(), 1, y, x, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * M);
}

void BM_backward_kernel(benchmark::State& state) {
  const auto M = static_cast<int>(state.range(0));
  const ParticleHistory ph = pf_run(linear_model(), linear_data().observations, M, 3, Exec::serial);
  const BackwardKernel kernel(linear_model(), ph, 50, exec_of(state));
  const Vector x = filtered_mean(ph, 50);
  Vector w;
  Matrix g;
  for (auto _ : state) {
    kernel.evaluate(x, w, &g);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * M);
}

void BM_pf_run(benchmark::State& state) {
  const auto M = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pf_run(linear_model(), linear_data().observations, M, 5, exec_of(state)));
}

void BM_repeated_sampling(benchmark::State& state) {
  static const LinearGaussianModel model = three_state_linear_model(20);
  static const Trajectory traj = simulate(model, 9);
  RepeatedSamplingOptions opt;
  opt.replicates = 8;
  opt.particles = static_cast<int>(state.range(0));
  opt.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(repeated_sampling(model, traj.observations, opt));
}

} // namespace

BENCHMARK(BM_propagate)->ArgsProduct({{2000, 20000}, {0, 1}});
BENCHMARK(BM_measurement_loglik)->ArgsProduct({{2000, 20000}, {0, 1}});
BENCHMARK(BM_backward_kernel)->ArgsProduct({{2000, 20000}, {0, 1}});
BENCHMARK(BM_pf_run)->ArgsProduct({{2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_repeated_sampling)->ArgsProduct({{500}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
