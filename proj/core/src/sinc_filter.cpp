#include "hnsf/sinc_filter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hnsf::sinc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_design_args(double fc, int M) {
  if (!(fc > 0.0 && fc < 1.0)) {
    throw std::invalid_argument("cutoff must lie strictly in (0,1), got " +
                                std::to_string(fc));
  }
  if (M < 3 || M % 2 == 0) {
    throw std::invalid_argument("filter length must be odd and >= 3, got " +
                                std::to_string(M));
  }
}

// sin(pi*fc*n)/(pi*n) with the n=0 limit fc.
double sinc_term(double fc, int n) {
  if (n == 0) return fc;
  const double x = kPi * static_cast<double>(n);
  return std::sin(fc * x) / x;
}

struct DesignScratch {
  std::vector<double> low;       // normalized causal taps
  std::vector<double> high;
  double beta_low = 0.0;         // sum of unnormalized low taps
  double beta_high = 0.0;        // parity-weighted sum of unnormalized high taps
};

// Designs both filters in one pass; shared by forward and backward paths.
void design_pair(double fc, int M, DesignScratch& s) {
  const int half = (M - 1) / 2;
  s.low.resize(M);
  s.high.resize(M);
  double beta_l = 0.0, beta_h = 0.0;
  for (int n = -half; n <= half; ++n) {
    const double w = hamming(n, M);
    const double lp = sinc_term(fc, n) * w;
    const double hp = (n == 0 ? (1.0 - fc) * w : -lp);
    s.low[n + half] = lp;
    s.high[n + half] = hp;
    beta_l += lp;
    beta_h += (n % 2 == 0 ? hp : -hp);
  }
  s.beta_low = beta_l;
  s.beta_high = beta_h;
  for (int m = 0; m < M; ++m) {
    s.low[m] /= beta_l;
    s.high[m] /= beta_h;
  }
}

struct JacobianScratch {
  DesignScratch design;
  std::vector<double> alpha;  // Hamm(n)*cos(pi*fc*n), causal indexing
  double gamma_low = 0.0;
  double gamma_high = 0.0;
  std::vector<double> dlow;
  std::vector<double> dhigh;
};

void jacobian_pair(double fc, int M, JacobianScratch& s) {
  design_pair(fc, M, s.design);
  const int half = (M - 1) / 2;
  s.alpha.resize(M);
  double gl = 0.0, gh = 0.0;
  for (int n = -half; n <= half; ++n) {
    const double a = hamming(n, M) * std::cos(kPi * fc * static_cast<double>(n));
    s.alpha[n + half] = a;
    gl += a;
    gh += (n % 2 == 0 ? a : -a);
  }
  s.gamma_low = gl;
  s.gamma_high = gh;
  s.dlow.resize(M);
  s.dhigh.resize(M);
  for (int m = 0; m < M; ++m) {
    s.dlow[m] = (s.alpha[m] - s.design.low[m] * gl) / s.design.beta_low;
    s.dhigh[m] = (s.design.high[m] * gh - s.alpha[m]) / s.design.beta_high;
  }
}

void check_merge_args(std::size_t t_harmonic, std::size_t t_noise,
                      std::size_t t_fc, int M) {
  if (t_harmonic != t_noise || t_harmonic != t_fc) {
    throw std::invalid_argument(
        "merge_waveforms: sequence lengths differ (harmonic " +
        std::to_string(t_harmonic) + ", noise " + std::to_string(t_noise) +
        ", cutoff " + std::to_string(t_fc) + ")");
  }
  if (M < 3 || M % 2 == 0) {
    throw std::invalid_argument("filter length must be odd and >= 3, got " +
                                std::to_string(M));
  }
}

}  // namespace

double hamming(int n, int filter_length) {
  return 0.54 + 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) /
                                static_cast<double>(filter_length));
}

double lowpass_unnormalized(double fc, int n, int filter_length) {
  return sinc_term(fc, n) * hamming(n, filter_length);
}

std::vector<double> design_lowpass(double fc, int filter_length) {
  check_design_args(fc, filter_length);
  DesignScratch s;
  design_pair(fc, filter_length, s);
  return std::move(s.low);
}

std::vector<double> design_highpass(double fc, int filter_length) {
  check_design_args(fc, filter_length);
  DesignScratch s;
  design_pair(fc, filter_length, s);
  return std::move(s.high);
}

TapJacobian tap_jacobian(double fc, int filter_length) {
  check_design_args(fc, filter_length);
  JacobianScratch s;
  jacobian_pair(fc, filter_length, s);
  return {std::move(s.dlow), std::move(s.dhigh)};
}

std::vector<double> merge_waveforms(const std::vector<double>& harmonic,
                                    const std::vector<double>& noise,
                                    const std::vector<double>& fc,
                                    int filter_length) {
  check_merge_args(harmonic.size(), noise.size(), fc.size(), filter_length);
  const std::size_t T = harmonic.size();
  const int M = filter_length;
  std::vector<double> out(T, 0.0);
  DesignScratch taps;
  double cached_fc = -1.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (fc[t] != cached_fc) {
      check_design_args(fc[t], M);
      design_pair(fc[t], M, taps);
      cached_fc = fc[t];
    }
    const int mmax = static_cast<int>(std::min<std::size_t>(t + 1, M));
    double acc = 0.0;
    for (int m = 0; m < mmax; ++m) {
      acc += harmonic[t - m] * taps.low[m] + noise[t - m] * taps.high[m];
    }
    out[t] = acc;
  }
  return out;
}

std::vector<double> merge_backward_fc(const std::vector<double>& dL_dy,
                                      const std::vector<double>& harmonic,
                                      const std::vector<double>& noise,
                                      const std::vector<double>& fc,
                                      int filter_length) {
  check_merge_args(harmonic.size(), noise.size(), fc.size(), filter_length);
  const std::size_t T = harmonic.size();
  const int M = filter_length;
  std::vector<double> out(T, 0.0);
  JacobianScratch jac;
  double cached_fc = -1.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (fc[t] != cached_fc) {
      jacobian_pair(fc[t], M, jac);
      cached_fc = fc[t];
    }
    const int mmax = static_cast<int>(std::min<std::size_t>(t + 1, M));
    double acc = 0.0;
    for (int m = 0; m < mmax; ++m) {
      acc += harmonic[t - m] * jac.dlow[m] + noise[t - m] * jac.dhigh[m];
    }
    out[t] = dL_dy[t] * acc;
  }
  return out;
}

ad::Tensor merge_op(const ad::Tensor& harmonic, const ad::Tensor& noise,
                    const ad::Tensor& fc, int filter_length) {
  const std::vector<double> hval(harmonic.values().begin(), harmonic.values().end());
  const std::vector<double> nval(noise.values().begin(), noise.values().end());
  const std::vector<double> fval(fc.values().begin(), fc.values().end());
  std::vector<double> out = merge_waveforms(hval, nval, fval, filter_length);
  const std::size_t T = out.size();
  const int M = filter_length;
  return ad::custom_op(
      "sinc_merge", {harmonic, noise, fc}, {T, 1}, std::move(out),
      [M](ad::Node& n) {
        ad::Node& h = *n.inputs[0];
        ad::Node& a = *n.inputs[1];
        ad::Node& f = *n.inputs[2];
        const std::size_t T = n.value.size();
        DesignScratch taps;
        double cached_fc = -1.0;
        if (h.requires_grad || a.requires_grad) {
          for (std::size_t t = 0; t < T; ++t) {
            const double g = n.grad[t];
            if (g == 0.0) continue;
            if (f.value[t] != cached_fc) {
              design_pair(f.value[t], M, taps);
              cached_fc = f.value[t];
            }
            const int mmax = static_cast<int>(std::min<std::size_t>(t + 1, M));
            for (int m = 0; m < mmax; ++m) {
              if (h.requires_grad) h.grad[t - m] += g * taps.low[m];
              if (a.requires_grad) a.grad[t - m] += g * taps.high[m];
            }
          }
        }
        if (f.requires_grad) {
          const std::vector<double> g(n.grad.begin(), n.grad.end());
          const std::vector<double> dfc =
              merge_backward_fc(g, h.value, a.value, f.value, M);
          for (std::size_t t = 0; t < T; ++t) f.grad[t] += dfc[t];
        }
      });
}

ad::Tensor merge_switched_op(const ad::Tensor& harmonic, const ad::Tensor& noise,
                             const std::vector<bool>& voiced,
                             const std::vector<double>& lp_voiced,
                             const std::vector<double>& hp_voiced,
                             const std::vector<double>& lp_unvoiced,
                             const std::vector<double>& hp_unvoiced) {
  const std::size_t T = harmonic.size();
  if (noise.size() != T || voiced.size() != T) {
    throw std::invalid_argument("merge_switched_op: sequence lengths differ");
  }
  const int M = static_cast<int>(lp_voiced.size());
  auto hval = harmonic.values();
  auto nval = noise.values();
  std::vector<double> out(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& lp = voiced[t] ? lp_voiced : lp_unvoiced;
    const auto& hp = voiced[t] ? hp_voiced : hp_unvoiced;
    const int mmax = static_cast<int>(std::min<std::size_t>(t + 1, M));
    double acc = 0.0;
    for (int m = 0; m < mmax; ++m) {
      acc += hval[t - m] * lp[m] + nval[t - m] * hp[m];
    }
    out[t] = acc;
  }
  return ad::custom_op(
      "fir_merge_uv", {harmonic, noise}, {T, 1}, std::move(out),
      [voiced, lp_voiced, hp_voiced, lp_unvoiced, hp_unvoiced](ad::Node& n) {
        ad::Node& h = *n.inputs[0];
        ad::Node& a = *n.inputs[1];
        const std::size_t T = n.value.size();
        const int M = static_cast<int>(lp_voiced.size());
        for (std::size_t t = 0; t < T; ++t) {
          const double g = n.grad[t];
          if (g == 0.0) continue;
          const auto& lp = voiced[t] ? lp_voiced : lp_unvoiced;
          const auto& hp = voiced[t] ? hp_voiced : hp_unvoiced;
          const int mmax = static_cast<int>(std::min<std::size_t>(t + 1, M));
          for (int m = 0; m < mmax; ++m) {
            if (h.requires_grad) h.grad[t - m] += g * lp[m];
            if (a.requires_grad) a.grad[t - m] += g * hp[m];
          }
        }
      });
}

std::vector<double> magnitude_response(const std::vector<double>& taps,
                                       std::size_t dft_size) {
  const std::size_t bins = dft_size / 2 + 1;
  std::vector<double> mag(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t m = 0; m < taps.size(); ++m) {
      const double ang = -2.0 * kPi * static_cast<double>(k * m) /
                         static_cast<double>(dft_size);
      re += taps[m] * std::cos(ang);
      im += taps[m] * std::sin(ang);
    }
    mag[k] = std::hypot(re, im);
  }
  return mag;
}

}  // namespace hnsf::sinc
