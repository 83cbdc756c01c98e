// Shared helpers for the test suites: naive DFT oracle, synthetic signals,
// deterministic RNG plumbing. Oracles here stay independent of the library
// code paths they check.

#ifndef HNSF_TESTS_TESTUTIL_HPP_
#define HNSF_TESTS_TESTUTIL_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace testutil {

// O(N^2) reference DFT.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x,
                                                   std::size_t n) {
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < x.size() && j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi *
                         static_cast<double>(k * j) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<double> sine_wave(double freq_hz, std::size_t samples,
                                     double amplitude = 1.0,
                                     int sample_rate = 16000) {
  std::vector<double> x(samples);
  for (std::size_t t = 0; t < samples; ++t) {
    x[t] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz *
                                static_cast<double>(t) / sample_rate);
  }
  return x;
}

inline std::vector<double> white_noise(std::size_t samples, double amplitude,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  std::vector<double> x(samples);
  for (auto& v : x) v = dist(rng);
  return x;
}

inline double mean_of(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

inline double std_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace testutil

#endif  // HNSF_TESTS_TESTUTIL_HPP_
