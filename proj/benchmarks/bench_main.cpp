#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hnsf/dsp.hpp"
#include "hnsf/model.hpp"
#include "hnsf/sinc_filter.hpp"

using namespace hnsf;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed,
                                  double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

void BM_DesignLowpass(benchmark::State& state) {
  double fc = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinc::design_lowpass(fc, 31));
    fc = fc < 0.9 ? fc + 1e-4 : 0.1;
  }
}
BENCHMARK(BM_DesignLowpass);

void BM_TapJacobian(benchmark::State& state) {
  double fc = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinc::tap_jacobian(fc, 31));
    fc = fc < 0.9 ? fc + 1e-4 : 0.1;
  }
}
BENCHMARK(BM_TapJacobian);

// One second of audio with a per-sample varying cutoff.
void BM_MergeWaveforms(benchmark::State& state) {
  const std::size_t T = 16000;
  const auto h = random_signal(T, 1);
  const auto a = random_signal(T, 2);
  const auto fc = random_signal(T, 3, 0.2, 0.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinc::merge_waveforms(h, a, fc, 31));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_MergeWaveforms);

void BM_MergeBackwardFc(benchmark::State& state) {
  const std::size_t T = 16000;
  const auto h = random_signal(T, 4);
  const auto a = random_signal(T, 5);
  const auto fc = random_signal(T, 6, 0.2, 0.8);
  const auto g = random_signal(T, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinc::merge_backward_fc(g, h, a, fc, 31));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_MergeBackwardFc);

void BM_StftLogAmplitude(benchmark::State& state) {
  dsp::Waveform w;
  w.samples = random_signal(16000, 8);
  const dsp::StftConfig cfg{512, 320, 80};
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsp::stft_log_amplitude(w, cfg));
  }
}
BENCHMARK(BM_StftLogAmplitude);

void BM_ExtractFeatures(benchmark::State& state) {
  dsp::Waveform w;
  w.samples = random_signal(16000, 9, -0.5, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsp::extract_features(w));
  }
}
BENCHMARK(BM_ExtractFeatures);

// Tiny-profile one-shot generation of 0.25 s of audio.
void BM_SynthesizeTiny(benchmark::State& state) {
  NsfModel model(ModelConfig::tiny(Variant::sinc1), 10);
  dsp::AcousticFeatures feats;
  feats.f0.assign(50, 0.0);
  for (std::size_t b = 0; b < 30; ++b) feats.f0[b] = 170.0;
  feats.mel = random_signal(50 * dsp::kMelBands, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize(model, feats, 12));
  }
  state.SetItemsProcessed(state.iterations() * 50 * 80);
}
BENCHMARK(BM_SynthesizeTiny);

}  // namespace

BENCHMARK_MAIN();
