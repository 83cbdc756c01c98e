// Frame-rate features to sample-rate conditioning: the 64-dim feature
// stream for the neural filter blocks, the upsampled F0 and U/V
// trajectories, and (for the trainable-cutoff variants) the predicted
// normalized cutoff.

#ifndef HNSF_CONDITION_HPP_
#define HNSF_CONDITION_HPP_

#include <random>
#include <string>
#include <vector>

#include "hnsf/dsp.hpp"
#include "hnsf/nn.hpp"

namespace hnsf {

enum class Variant { base, sinc1, sinc2, sinc3 };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

inline constexpr double kVoicedFlag = 0.7;
inline constexpr double kUnvoicedFlag = 0.3;
inline constexpr double kCutoffClamp = 1e-3;
inline constexpr std::size_t kUpsampleFactor = 80;
inline constexpr std::size_t kConditionDim = 64;

struct ConditionOutputs {
  ad::Tensor cond;      // T x 64 conditioning features
  ad::Tensor residual;  // T x 1, r in (-1,1); undefined for base
  ad::Tensor fc_pre;    // T x 1 fused cutoff before smoothing; undefined for base
  ad::Tensor fc;        // T x 1 smoothed+clamped cutoff; undefined for base
  std::vector<double> f0_per_sample;
  std::vector<bool> voiced_per_sample;
  std::vector<double> uv_per_sample;  // 0.7 voiced / 0.3 unvoiced
};

// Per-sample v_t in {0.7, 0.3} from the frame voicing decision (f0 > 0).
std::vector<double> uv_trajectory(const dsp::AcousticFeatures& feats);

class ConditionNet {
 public:
  ConditionNet(nn::ParameterStore& store, Variant variant, std::mt19937_64& rng);

  ConditionOutputs forward(const dsp::AcousticFeatures& feats) const;

  // Fuses v (constant) and r into the pre-smoothing cutoff according to the
  // variant: identity(v + 0.2 r), identity(0.5 r + 0.5) or
  // sigmoid(a v + b r + c) with trainable scalars.
  ad::Tensor fuse_pre_smoothing(const ad::Tensor& v, const ad::Tensor& r) const;

  Variant variant() const { return variant_; }
  bool has_mvf_branch() const { return variant_ != Variant::base; }

 private:
  Variant variant_;
  nn::BiLstm feat_bilstm_;
  nn::Conv1d feat_conv_;
  nn::BiLstm mvf_bilstm_;
  nn::Conv1d mvf_conv_;
  ad::Tensor fuse_a_, fuse_b_, fuse_c_;  // sinc3 only
};

}  // namespace hnsf

#endif  // HNSF_CONDITION_HPP_
