// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "dephase/constants.hpp"
#include "dephase/filter.hpp"
#include "dephase/optimizer.hpp"
#include "dephase/oracle.hpp"
#include "dephase/rb.hpp"

using namespace dephase;
using constants::two_pi;

namespace {

const auto kAmbient = noise::NoiseSpectrum::ambient(2e5, 4.0, two_pi * 30);
const auto kOhmic = noise::NoiseSpectrum::ohmic(50.0, two_pi * 500);

template <bool Parallel>
void coherence_curve(benchmark::State& state) {
  const auto taus = filter::logspace(1e-4, 2e-2, 64);
  for (auto _ : state) {
    auto c = Parallel ? filter::coherence_curve(pulse::udd(6), taus, kAmbient)
                      : filter::coherence_curve_serial(pulse::udd(6), taus, kAmbient);
    benchmark::DoNotOptimize(c);
  }
}

template <bool Parallel>
void monte_carlo(benchmark::State& state) {
  oracle::DephasingRun run;
  run.sequence = pulse::cpmg(4);
  run.spectrum = kOhmic;
  run.shots = 2000;
  const std::vector<double> taus{5e-4, 1e-3, 2e-3};
  for (auto _ : state) {
    auto c = Parallel ? oracle::simulate_coherence(run, taus)
                      : oracle::simulate_coherence_serial(run, taus);
    benchmark::DoNotOptimize(c);
  }
}

template <bool Parallel>
void benchmarking(benchmark::State& state) {
  rb::Experiment e;
  e.lengths = {1, 10, 25, 50, 75, 100, 125, 150, 175, 200};
  e.runs = 50;
  e.errors = {8e-4, 0.01, 100.0};
  for (auto _ : state) {
    auto d = Parallel ? rb::run_experiment(e) : rb::run_experiment_serial(e);
    benchmark::DoNotOptimize(d);
  }
}

template <bool Parallel>
void optimizer(benchmark::State& state) {
  opt::Problem p;
  p.n = 4;
  p.tau = 1e-3;
  p.spectrum = kOhmic;
  p.restarts = 3;
  for (auto _ : state) {
    auto r = Parallel ? opt::optimize(p) : opt::optimize_serial(p);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(coherence_curve<false>)->Name("coherence_curve/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(coherence_curve<true>)->Name("coherence_curve/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(monte_carlo<false>)->Name("monte_carlo/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(monte_carlo<true>)->Name("monte_carlo/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(benchmarking<false>)->Name("rb/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(benchmarking<true>)->Name("rb/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(optimizer<false>)->Name("optimizer/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(optimizer<true>)->Name("optimizer/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
