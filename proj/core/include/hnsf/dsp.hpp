// Non-differentiable signal primitives: framing/FFT for spectral analysis,
// mel + F0 feature extraction, frame-to-sample upsampling and boxcar
// smoothing. Everything here is a pure function.

#ifndef HNSF_DSP_HPP_
#define HNSF_DSP_HPP_

#include <cstddef>
#include <vector>

namespace hnsf::dsp {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameShift = 80;  // 5 ms at 16 kHz
inline constexpr int kMelBands = 80;
inline constexpr double kLogFloor = 1e-9;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

struct StftConfig {
  int dft_bins = 512;
  int frame_length = 320;
  int frame_shift = 80;  // window is always Hann
};

struct AcousticFeatures {
  std::vector<double> f0;   // per frame, Hz; 0 = unvoiced
  std::vector<double> mel;  // frames x kMelBands, row-major
  std::size_t frames() const { return f0.size(); }
};

// In-place radix-2 complex FFT; size must be a power of two.
void fft(std::vector<double>& re, std::vector<double>& im, bool inverse);

std::vector<double> hann_window(std::size_t length);

// Frames x (dft_bins/2+1) matrix of log(|DFT|^2 + 1e-9). Frames start every
// frame_shift samples; the last partial frame is zero-padded.
struct LogSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> data;  // row-major
  double at(std::size_t f, std::size_t b) const { return data[f * bins + b]; }
};
LogSpectrogram stft_log_amplitude(const Waveform& w, const StftConfig& cfg);

// Copies each frame value `factor` times.
std::vector<double> upsample_repeat(const std::vector<double>& frames,
                                    std::size_t factor);

// Centered boxcar of `taps` (odd) samples; edges replicate boundary values.
std::vector<double> moving_average(const std::vector<double>& x,
                                   std::size_t taps);
// Odd tap count covering window_ms at 16 kHz (5 ms -> 81 taps).
std::size_t smoothing_taps(double window_ms);

// 80-band log-mel (512-point DFT, 20 ms frames, 5 ms shift, bands spanning
// 0-8 kHz) plus autocorrelation F0 with a voicing decision.
AcousticFeatures extract_features(const Waveform& w);

// Mel weights alone, bands x (dft_bins/2+1) row-major triangles.
std::vector<double> mel_filterbank(std::size_t bands, std::size_t dft_bins,
                                   double sample_rate);

}  // namespace hnsf::dsp

#endif  // HNSF_DSP_HPP_
