#include "hnsf/source.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace hnsf {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::vector<double> sine_harmonic(const std::vector<double>& f0_per_sample,
                                  int harmonic_index, double initial_phase,
                                  const SourceConfig& cfg, std::mt19937_64& rng) {
  if (harmonic_index < 1 || harmonic_index > cfg.num_harmonics) {
    throw std::invalid_argument("sine_harmonic: harmonic index out of range");
  }
  const double nyquist = cfg.sample_rate / 2.0;
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  std::vector<double> out(f0_per_sample.size());
  double phase = 0.0;
  bool warned = false;
  for (std::size_t t = 0; t < f0_per_sample.size(); ++t) {
    const double f = f0_per_sample[t];
    const double hf = harmonic_index * f;
    // running phase over every step, wrapped to keep precision on long takes
    phase = std::fmod(phase + kTwoPi * hf / cfg.sample_rate, kTwoPi);
    const double n = noise(rng);
    if (f > 0.0) {
      if (hf >= nyquist && !warned) {
        std::fprintf(stderr,
                     "[source] harmonic %d at %.1f Hz reaches Nyquist, "
                     "aliasing will occur\n",
                     harmonic_index, hf);
        warned = true;
      }
      out[t] = cfg.alpha * std::sin(phase + initial_phase) + n;
    } else {
      out[t] = cfg.alpha / (3.0 * cfg.sigma) * n;
    }
  }
  return out;
}

std::vector<double> noise_excitation(std::size_t length, const SourceConfig& cfg,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, cfg.alpha / 3.0);
  std::vector<double> out(length);
  for (auto& v : out) v = noise(rng);
  return out;
}

Excitation generate_excitation(const std::vector<double>& f0_per_sample,
                               const SourceConfig& cfg, std::mt19937_64& rng) {
  const std::size_t T = f0_per_sample.size();
  const std::size_t I = static_cast<std::size_t>(cfg.num_harmonics);
  Excitation exc;
  exc.length = T;
  exc.num_harmonics = I;
  exc.phases.resize(I);
  std::uniform_real_distribution<double> phase_dist(-std::numbers::pi,
                                                    std::numbers::pi);
  for (auto& p : exc.phases) p = phase_dist(rng);
  exc.harmonics.resize(T * I);
  for (std::size_t i = 0; i < I; ++i) {
    const auto h = sine_harmonic(f0_per_sample, static_cast<int>(i) + 1,
                                 exc.phases[i], cfg, rng);
    for (std::size_t t = 0; t < T; ++t) exc.harmonics[t * I + i] = h[t];
  }
  exc.noise = noise_excitation(T, cfg, rng);
  return exc;
}

ad::Tensor merge_harmonics(const Excitation& exc, const ad::Tensor& weights,
                           const ad::Tensor& bias) {
  if (weights.rows() != exc.num_harmonics || weights.cols() != 1) {
    throw std::invalid_argument("merge_harmonics: weights must be (I x 1), got " +
                                ad::shape_str(weights.shape()));
  }
  ad::Tensor h = ad::Tensor::leaf({exc.length, exc.num_harmonics}, exc.harmonics);
  return ad::tanh(ad::add(ad::matmul(h, weights), bias));
}

}  // namespace hnsf
