#include "hnsf/condition.hpp"

#include <stdexcept>

namespace hnsf {

using ad::Tensor;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::base: return "base";
    case Variant::sinc1: return "sinc1";
    case Variant::sinc2: return "sinc2";
    case Variant::sinc3: return "sinc3";
  }
  return "base";
}

Variant variant_from_name(const std::string& name) {
  if (name == "base") return Variant::base;
  if (name == "sinc1") return Variant::sinc1;
  if (name == "sinc2") return Variant::sinc2;
  if (name == "sinc3") return Variant::sinc3;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected base|sinc1|sinc2|sinc3)");
}

std::vector<double> uv_trajectory(const dsp::AcousticFeatures& feats) {
  std::vector<double> per_frame(feats.frames());
  for (std::size_t b = 0; b < feats.frames(); ++b) {
    per_frame[b] = feats.f0[b] > 0.0 ? kVoicedFlag : kUnvoicedFlag;
  }
  return dsp::upsample_repeat(per_frame, kUpsampleFactor);
}

ConditionNet::ConditionNet(nn::ParameterStore& store, Variant variant,
                           std::mt19937_64& rng)
    : variant_(variant),
      feat_bilstm_(store, "cond.feat.bilstm", dsp::kMelBands, 32, rng),
      feat_conv_(store, "cond.feat.conv", 64, 63, 3, 1, rng) {
  if (has_mvf_branch()) {
    mvf_bilstm_ = nn::BiLstm(store, "cond.mvf.bilstm", dsp::kMelBands, 32, rng);
    mvf_conv_ = nn::Conv1d(store, "cond.mvf.conv", 64, 1, 3, 1, rng);
  }
  if (variant_ == Variant::sinc3) {
    // sigmoid(a*0.7 + c) ~ 0.67 voiced at init: unsaturated start
    fuse_a_ = store.create_const("cond.fuse.a", {1, 1}, 1.0);
    fuse_b_ = store.create_const("cond.fuse.b", {1, 1}, 0.5);
    fuse_c_ = store.create_const("cond.fuse.c", {1, 1}, 0.0);
  }
}

Tensor ConditionNet::fuse_pre_smoothing(const Tensor& v, const Tensor& r) const {
  switch (variant_) {
    case Variant::sinc1:
      return ad::add(v, ad::scale(r, 0.2));
    case Variant::sinc2:
      return ad::add(ad::scale(r, 0.5), Tensor::scalar(0.5));
    case Variant::sinc3:
      return ad::sigmoid(
          ad::add(ad::add(ad::mul(v, fuse_a_), ad::mul(r, fuse_b_)), fuse_c_));
    case Variant::base:
      break;
  }
  throw std::logic_error("fuse_pre_smoothing: base variant has no cutoff");
}

ConditionOutputs ConditionNet::forward(const dsp::AcousticFeatures& feats) const {
  const std::size_t B = feats.frames();
  if (B == 0) throw std::invalid_argument("condition forward: no frames");

  ConditionOutputs out;
  out.f0_per_sample = dsp::upsample_repeat(feats.f0, kUpsampleFactor);
  out.uv_per_sample = uv_trajectory(feats);
  out.voiced_per_sample.resize(out.uv_per_sample.size());
  for (std::size_t t = 0; t < out.uv_per_sample.size(); ++t) {
    out.voiced_per_sample[t] = out.uv_per_sample[t] == kVoicedFlag;
  }

  Tensor mel = Tensor::leaf({B, dsp::kMelBands}, feats.mel);
  Tensor f0 = Tensor::leaf({B, 1}, feats.f0);

  // Bi-LSTM 64 -> CONV 63 -> concat frame F0 -> upsample to sample rate
  Tensor h = feat_bilstm_.forward(mel);
  Tensor c = feat_conv_.forward(h);
  out.cond = ad::repeat_rows(ad::concat({c, f0}, 1), kUpsampleFactor);

  if (has_mvf_branch()) {
    Tensor rh = mvf_bilstm_.forward(mel);
    Tensor r_frame = ad::tanh(mvf_conv_.forward(rh));
    out.residual = ad::repeat_rows(r_frame, kUpsampleFactor);
    Tensor v = Tensor::column(out.uv_per_sample);
    out.fc_pre = fuse_pre_smoothing(v, out.residual);
    const std::size_t radius = dsp::smoothing_taps(5.0) / 2;
    out.fc = ad::clamp(ad::moving_average_rows(out.fc_pre, radius), kCutoffClamp,
                       1.0 - kCutoffClamp);
  }
  return out;
}

}  // namespace hnsf
