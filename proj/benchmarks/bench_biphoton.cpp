#include <benchmark/benchmark.h>

#include <vector>

#include "biphoton/analysis.hpp"
#include "biphoton/detection.hpp"
#include "biphoton/experiment.hpp"
#include "biphoton/interference.hpp"

using namespace biphoton;

namespace {

Apparatus paper_scale() {
  Apparatus app;
  app.source = source_from_fractions({0.82, 0.15, 0.03, 0.0});
  app.filter.coherence_length_um = 59.0;
  app.arm_a.push_back({"walkoff_a", JonesMatrix::identity(), 4.0, 0.0});
  app.arm_b.push_back({"walkoff_b", JonesMatrix::identity(), 0.0, 7.0});
  app.acquisition.pair_rate = 11612.0;
  app.acquisition.duration = 50.0;
  app.acquisition.efficiency = {0.2, 0.2, 0.2, 0.2};
  return app;
}

std::vector<double> delays() {
  std::vector<double> d;
  for (double x = -150.0; x <= 150.0; x += 5.0) d.push_back(x);
  return d;
}

}  // namespace

static void BM_CoincidenceProbabilities(benchmark::State& state) {
  const Apparatus app = paper_scale();
  ArmStacks arms = app.stacks();
  arms.a.insert(arms.a.begin(), {"hwp", hwp(Angle::degrees(22.5)), 0.0, 0.0});
  double delay = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(coincidence_probabilities(app.source, arms, delay, app.filter, 0.98));
    delay += 0.1;
  }
}
BENCHMARK(BM_CoincidenceProbabilities);

static void BM_DelayScan(benchmark::State& state) {
  const Apparatus app = paper_scale();
  const auto d = delays();
  for (auto _ : state) benchmark::DoNotOptimize(run_delay_scan(app, d));
}
BENCHMARK(BM_DelayScan)->Unit(benchmark::kMicrosecond);

static void BM_CountCoincidences(benchmark::State& state) {
  // Two detectors at equal rates; state.range(0) events in total.
  const double events = static_cast<double>(state.range(0));
  AcquisitionConfig acq;
  acq.duration = 1.0;
  acq.dark_rate = {events / 2, 0.0, events / 2, 0.0};
  acq.rng_seed = 1;
  const TimestampStreams s = generate_timestamps(ChannelProbabilities{}, acq);
  for (auto _ : state) benchmark::DoNotOptimize(count_coincidences(s, 5e-9));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountCoincidences)->Arg(100'000)->Arg(10'000'000)->Unit(benchmark::kMillisecond);

static void BM_GaussianFit(benchmark::State& state) {
  Apparatus app = paper_scale();
  app.acquisition.rng_seed = 3;
  const ScanResult scan = run_delay_scan(app, delays());
  const auto x = scan.settings();
  const auto y = scan.channel(Channel::HcHd);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gaussian_offset(x, y));
}
BENCHMARK(BM_GaussianFit)->Unit(benchmark::kMicrosecond);

static void BM_Sin2Fit(benchmark::State& state) {
  Apparatus app = paper_scale();
  std::vector<double> angles;
  for (double a = 0.0; a <= 90.0; a += 5.0) angles.push_back(a);
  const ScanResult scan = run_hwp_scan(app, angles, 0.0);
  const auto x = scan.settings();
  const auto y = scan.channel(Channel::HcVc);
  for (auto _ : state) benchmark::DoNotOptimize(fit_sin2_offset(x, y, Sin2Mode::hwp_2theta));
}
BENCHMARK(BM_Sin2Fit)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
