// Sine-based harmonic excitation and Gaussian noise excitation driven by
// the upsampled per-sample F0.

#ifndef HNSF_SOURCE_HPP_
#define HNSF_SOURCE_HPP_

#include <random>
#include <vector>

#include "hnsf/tensor.hpp"

namespace hnsf {

struct SourceConfig {
  double alpha = 0.1;    // sine amplitude
  double sigma = 0.003;  // additive noise std in voiced regions
  int num_harmonics = 8;
  int sample_rate = 16000;
};

struct Excitation {
  // T x I matrix of per-harmonic excitations (column i-1 = harmonic i)
  std::vector<double> harmonics;
  std::size_t length = 0;
  std::size_t num_harmonics = 0;
  std::vector<double> noise;   // Gaussian noise branch input, std alpha/3
  std::vector<double> phases;  // initial phase per harmonic
};

// One harmonic: voiced samples carry alpha*sin(cumulative phase of i*f0) plus
// N(0, sigma^2) noise; unvoiced samples are (alpha/(3*sigma)) * N(0, sigma^2).
// Warns once on stderr if i*f0 reaches Nyquist anywhere.
std::vector<double> sine_harmonic(const std::vector<double>& f0_per_sample,
                                  int harmonic_index, double initial_phase,
                                  const SourceConfig& cfg, std::mt19937_64& rng);

// i.i.d. N(0, (alpha/3)^2) sequence.
std::vector<double> noise_excitation(std::size_t length, const SourceConfig& cfg,
                                     std::mt19937_64& rng);

// All harmonics plus the noise branch input, with phases drawn from rng.
Excitation generate_excitation(const std::vector<double>& f0_per_sample,
                               const SourceConfig& cfg, std::mt19937_64& rng);

// Trainable merge e = tanh(sum_i w_i e^<i> + w_b); `weights` is (I x 1) and
// `bias` (1 x 1), both registered parameters. Returns a (T x 1) tensor.
ad::Tensor merge_harmonics(const Excitation& exc, const ad::Tensor& weights,
                           const ad::Tensor& bias);

}  // namespace hnsf

#endif  // HNSF_SOURCE_HPP_
