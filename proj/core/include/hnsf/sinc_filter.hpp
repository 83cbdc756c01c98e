// Time-variant windowed-sinc low/high-pass filtering with a per-sample
// normalized cutoff, including the closed-form gradient of the taps with
// respect to the cutoff. This is the differentiable merge that joins the
// harmonic and noise branches.

#ifndef HNSF_SINC_FILTER_HPP_
#define HNSF_SINC_FILTER_HPP_

#include <cstddef>
#include <vector>

#include "hnsf/tensor.hpp"

namespace hnsf::sinc {

inline constexpr int kDefaultFilterLength = 31;

// Hamming window 0.54 + 0.46*cos(2*pi*n/M) with n centered on 0.
double hamming(int n, int filter_length);

// Causal length-M low-pass taps for normalized cutoff fc in (0,1):
// sinc(pi*fc*n) * Hamming, normalized to unit DC gain, index-shifted so
// tap m corresponds to n = m - (M-1)/2.
std::vector<double> design_lowpass(double fc, int filter_length);

// High-pass companion: (unit impulse - unnormalized low-pass) * Hamming,
// normalized to unit gain magnitude at Nyquist, shifted causal.
std::vector<double> design_highpass(double fc, int filter_length);

// Unnormalized tap h~_n for n in [-(M-1)/2, (M-1)/2], low-pass flavor.
double lowpass_unnormalized(double fc, int n, int filter_length);

// d(tap m)/d(fc) for both designs at a single cutoff; each vector has
// length M. Exposes the closed-form Jacobian used by the merge backward.
struct TapJacobian {
  std::vector<double> dlow;
  std::vector<double> dhigh;
};
TapJacobian tap_jacobian(double fc, int filter_length);

// y_t = sum_m op_{t-m} lp_{t,m} + sum_m oa_{t-m} hp_{t,m} with per-sample
// taps designed from fc[t]; samples before the start are zero. Consecutive
// equal cutoffs reuse the designed taps.
std::vector<double> merge_waveforms(const std::vector<double>& harmonic,
                                    const std::vector<double>& noise,
                                    const std::vector<double>& fc,
                                    int filter_length);

// dL/dfc_t for the merge above given dL/dy (the closed-form backward);
// forward inputs are re-used, taps are re-derived on the fly.
std::vector<double> merge_backward_fc(const std::vector<double>& dL_dy,
                                      const std::vector<double>& harmonic,
                                      const std::vector<double>& noise,
                                      const std::vector<double>& fc,
                                      int filter_length);

// Graph op: inputs (harmonic T x 1, noise T x 1, fc T x 1) -> (T x 1).
// Backward propagates to all three inputs; the fc path uses the closed-form
// tap Jacobian rather than tracing the design arithmetic.
ad::Tensor merge_op(const ad::Tensor& harmonic, const ad::Tensor& noise,
                    const ad::Tensor& fc, int filter_length);

// Graph op for the fixed-filter baseline: per-sample taps switch between
// two precomputed (low, high) designs on the voiced flag. No cutoff
// gradient; harmonic/noise gradients as in merge_op.
ad::Tensor merge_switched_op(const ad::Tensor& harmonic, const ad::Tensor& noise,
                             const std::vector<bool>& voiced,
                             const std::vector<double>& lp_voiced,
                             const std::vector<double>& hp_voiced,
                             const std::vector<double>& lp_unvoiced,
                             const std::vector<double>& hp_unvoiced);

// |H| of a tap vector on dft_size/2+1 frequencies (normalized 0..1).
std::vector<double> magnitude_response(const std::vector<double>& taps,
                                       std::size_t dft_size);

}  // namespace hnsf::sinc

#endif  // HNSF_SINC_FILTER_HPP_
