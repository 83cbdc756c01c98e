#include "hnsf/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hnsf::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace

void fft(std::vector<double>& re, std::vector<double>& im, bool inverse) {
  const std::size_t n = re.size();
  if (n != im.size() || !is_pow2(n)) {
    throw std::invalid_argument("fft: size must be a power of two");
  }
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::size_t a = i + j, b = i + j + len / 2;
        const double xr = re[b] * cr - im[b] * ci;
        const double xi = re[b] * ci + im[b] * cr;
        re[b] = re[a] - xr;
        im[b] = im[a] - xi;
        re[a] += xr;
        im[a] += xi;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      re[i] *= inv;
      im[i] *= inv;
    }
  }
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                static_cast<double>(length - 1));
  }
  return w;
}

LogSpectrogram stft_log_amplitude(const Waveform& w, const StftConfig& cfg) {
  if (w.samples.empty()) {
    throw std::invalid_argument("stft_log_amplitude: empty waveform");
  }
  if (cfg.frame_shift > cfg.frame_length) {
    throw std::invalid_argument("stft_log_amplitude: frame_shift > frame_length");
  }
  const std::size_t T = w.samples.size();
  const std::size_t N = static_cast<std::size_t>(cfg.dft_bins);
  const std::size_t L = static_cast<std::size_t>(cfg.frame_length);
  const std::size_t S = static_cast<std::size_t>(cfg.frame_shift);
  const std::size_t copy_len = std::min(L, N);  // truncate if L > N (unused here)
  const std::size_t frames = (T + S - 1) / S;
  const std::size_t bins = N / 2 + 1;
  const std::vector<double> win = hann_window(L);

  LogSpectrogram out;
  out.frames = frames;
  out.bins = bins;
  out.data.resize(frames * bins);

  std::vector<double> re(N), im(N);
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    const std::size_t start = f * S;
    const std::size_t avail = std::min(copy_len, T - start);
    for (std::size_t j = 0; j < avail; ++j) {
      re[j] = w.samples[start + j] * win[j];
    }
    fft(re, im, false);
    double* row = out.data.data() + f * bins;
    for (std::size_t k = 0; k < bins; ++k) {
      row[k] = std::log(re[k] * re[k] + im[k] * im[k] + kLogFloor);
    }
  }
  return out;
}

std::vector<double> upsample_repeat(const std::vector<double>& frames,
                                    std::size_t factor) {
  if (factor < 1) throw std::invalid_argument("upsample_repeat: factor must be >= 1");
  std::vector<double> out;
  out.reserve(frames.size() * factor);
  for (double v : frames) {
    out.insert(out.end(), factor, v);
  }
  return out;
}

std::size_t smoothing_taps(double window_ms) {
  const double span = window_ms * 1e-3 * kSampleRate;
  std::size_t radius = static_cast<std::size_t>(span / 2.0);
  return 2 * radius + 1;
}

std::vector<double> moving_average(const std::vector<double>& x,
                                   std::size_t taps) {
  if (taps % 2 == 0) throw std::invalid_argument("moving_average: taps must be odd");
  if (x.empty()) return {};
  const std::ptrdiff_t rad = static_cast<std::ptrdiff_t>(taps / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const double inv = 1.0 / static_cast<double>(taps);
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t o = -rad; o <= rad; ++o) {
      acc += x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + o, 0, n - 1))];
    }
    out[static_cast<std::size_t>(i)] = acc * inv;
  }
  return out;
}

std::vector<double> mel_filterbank(std::size_t bands, std::size_t dft_bins,
                                   double sample_rate) {
  const std::size_t bins = dft_bins / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double mel =
        mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                     static_cast<double>(bands + 1);
    edges[i] = mel_to_hz(mel);
  }
  std::vector<double> weights(bands * bins, 0.0);
  for (std::size_t m = 0; m < bands; ++m) {
    const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double fk =
          static_cast<double>(k) * sample_rate / static_cast<double>(dft_bins);
      double v = 0.0;
      if (fk > f0 && fk < f1) {
        v = (fk - f0) / (f1 - f0);
      } else if (fk >= f1 && fk < f2) {
        v = (f2 - fk) / (f2 - f1);
      }
      weights[m * bins + k] = v;
    }
  }
  return weights;
}

namespace {

// Normalized autocorrelation pitch estimate for one analysis window.
// Returns 0 for unvoiced.
double f0_for_window(const double* x, std::size_t len) {
  constexpr std::size_t kMinLag = kSampleRate / 500;  // 500 Hz ceiling
  constexpr std::size_t kMaxLag = kSampleRate / 60;   // 60 Hz floor
  constexpr double kVoicingThreshold = 0.45;
  constexpr double kEnergyFloor = 1e-6;

  double energy = 0.0;
  for (std::size_t i = 0; i < len; ++i) energy += x[i] * x[i];
  if (energy / static_cast<double>(len) < kEnergyFloor) return 0.0;

  const std::size_t max_lag = std::min(kMaxLag, len - 1);
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = kMinLag; lag <= max_lag; ++lag) {
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    for (std::size_t i = 0; i + lag < len; ++i) {
      num += x[i] * x[i + lag];
      e0 += x[i] * x[i];
      e1 += x[i + lag] * x[i + lag];
    }
    const double den = std::sqrt(e0 * e1);
    r[lag] = den > 0.0 ? num / den : 0.0;
  }
  double rmax = 0.0;
  for (std::size_t lag = kMinLag; lag <= max_lag; ++lag) rmax = std::max(rmax, r[lag]);
  if (rmax < kVoicingThreshold) return 0.0;

  // Smallest lag nearly as good as the best one; avoids octave-down errors
  // when the signal correlates equally at period multiples.
  std::size_t best = 0;
  for (std::size_t lag = kMinLag; lag <= max_lag; ++lag) {
    if (r[lag] >= 0.99 * rmax) {
      best = lag;
      break;
    }
  }
  // parabolic refinement around the integer peak
  double lag_f = static_cast<double>(best);
  if (best > kMinLag && best < max_lag) {
    const double y0 = r[best - 1], y1 = r[best], y2 = r[best + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-12) {
      const double delta = 0.5 * (y0 - y2) / denom;
      if (std::abs(delta) < 1.0) lag_f += delta;
    }
  }
  return static_cast<double>(kSampleRate) / lag_f;
}

}  // namespace

AcousticFeatures extract_features(const Waveform& w) {
  if (w.sample_rate != kSampleRate) {
    throw std::invalid_argument("extract_features: expected 16000 Hz input, got " +
                                std::to_string(w.sample_rate));
  }
  const std::size_t T = w.samples.size();
  const std::size_t B = (T + kFrameShift - 1) / kFrameShift;

  AcousticFeatures feats;
  feats.f0.resize(B);
  feats.mel.resize(B * kMelBands);

  // mel spectrogram: 512-point DFT over 20 ms Hann frames
  const std::size_t N = 512, bins = N / 2 + 1;
  const std::vector<double> win = hann_window(320);
  const std::vector<double> fbank = mel_filterbank(kMelBands, N, kSampleRate);
  std::vector<double> re(N), im(N), power(bins);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    const std::size_t start = b * kFrameShift;
    const std::size_t avail = std::min<std::size_t>(320, T - start);
    for (std::size_t j = 0; j < avail; ++j) re[j] = w.samples[start + j] * win[j];
    fft(re, im, false);
    for (std::size_t k = 0; k < bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];
    double* mrow = feats.mel.data() + b * kMelBands;
    for (std::size_t m = 0; m < kMelBands; ++m) {
      const double* frow = fbank.data() + m * bins;
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += frow[k] * power[k];
      mrow[m] = std::log(acc + kLogFloor);
    }
  }

  // F0 over 25 ms windows centered on each frame
  constexpr std::size_t kPitchWin = 400;
  std::vector<double> buf(kPitchWin);
  for (std::size_t b = 0; b < B; ++b) {
    const std::ptrdiff_t center =
        static_cast<std::ptrdiff_t>(b * kFrameShift) + kFrameShift / 2;
    std::ptrdiff_t start = center - static_cast<std::ptrdiff_t>(kPitchWin) / 2;
    start = std::clamp<std::ptrdiff_t>(
        start, 0, std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(T) -
                                                  static_cast<std::ptrdiff_t>(kPitchWin)));
    const std::size_t len =
        std::min<std::size_t>(kPitchWin, T - static_cast<std::size_t>(start));
    std::copy(w.samples.begin() + start, w.samples.begin() + start + len, buf.begin());
    feats.f0[b] = len > kSampleRate / 60 ? f0_for_window(buf.data(), len) : 0.0;
  }
  return feats;
}

}  // namespace hnsf::dsp
