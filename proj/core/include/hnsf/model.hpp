// Harmonic-plus-noise source-filter waveform models: dilated-conv filter
// blocks over sine/noise excitation, merged by either fixed U/V-switched
// FIR filters (base) or the trainable-cutoff sinc merge (sinc1/2/3), trained
// on a sum of three log-spectral-amplitude distances.

#ifndef HNSF_MODEL_HPP_
#define HNSF_MODEL_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hnsf/condition.hpp"
#include "hnsf/dsp.hpp"
#include "hnsf/nn.hpp"
#include "hnsf/optim.hpp"
#include "hnsf/sinc_filter.hpp"
#include "hnsf/source.hpp"

namespace hnsf {

std::array<dsp::StftConfig, 3> default_loss_configs();

struct ModelConfig {
  Variant variant = Variant::sinc1;
  int harmonic_blocks = 5;
  int noise_blocks = 1;
  std::size_t channels = 64;
  int layers_per_block = 10;
  int conv_kernel = 3;
  int filter_length = 31;
  SourceConfig source;
  std::array<dsp::StftConfig, 3> losses = default_loss_configs();
  // Fixed-filter cutoffs, normalized to Nyquist: 5/7 kHz voiced, 1/3 kHz
  // unvoiced at 16 kHz.
  double voiced_low = 0.625;
  double voiced_high = 0.875;
  double unvoiced_low = 0.125;
  double unvoiced_high = 0.375;

  // 1+1 blocks at 16 channels, for CI-speed experiments.
  static ModelConfig tiny(Variant v);
};

struct LossReport {
  std::array<double, 3> per_resolution{};
  double total = 0.0;
};

struct SpectralLoss {
  ad::Tensor total;  // differentiable scalar
  LossReport report;
};

// Mean over frames and bins of 0.5*(log|X|^2 - log|Xref|^2)^2 per
// configuration; total is their sum. Shorter signal is zero-padded.
SpectralLoss spectral_loss(const ad::Tensor& generated,
                           const std::vector<double>& reference,
                           const std::array<dsp::StftConfig, 3>& cfgs);

// One neural filter block: FF to `channels`, ten dilated-conv rounds each
// adding the projected condition features and a skip, FF back to one
// channel, plus a block-level skip from the input.
class FilterBlock {
 public:
  FilterBlock(nn::ParameterStore& store, const std::string& prefix,
              const ModelConfig& cfg, std::mt19937_64& rng);
  ad::Tensor forward(const ad::Tensor& signal, const ad::Tensor& cond) const;

 private:
  nn::Linear ff_in_, cond_proj_, ff_out_;
  std::vector<nn::Conv1d> convs_;
};

class NsfModel {
 public:
  NsfModel(const ModelConfig& cfg, std::uint64_t init_seed);

  struct Forward {
    ad::Tensor output;    // T x 1
    ad::Tensor harmonic;  // T x 1 pre-merge harmonic component
    ad::Tensor noise;     // T x 1 pre-merge noise component
    ConditionOutputs cond;
    // Normalized cutoffs the merge actually used, per sample.
    std::vector<double> low_cutoff, high_cutoff;
  };
  Forward forward(const dsp::AcousticFeatures& feats, std::mt19937_64& gen_rng);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return store_; }
  const ConditionNet& condition_net() const { return *cond_net_; }

 private:
  ModelConfig cfg_;
  nn::ParameterStore store_;
  ad::Tensor merge_w_, merge_b_;
  std::optional<ConditionNet> cond_net_;
  std::vector<FilterBlock> harmonic_blocks_;
  std::vector<FilterBlock> noise_blocks_;
  std::vector<double> lp_voiced_, hp_voiced_, lp_unvoiced_, hp_unvoiced_;
};

struct Utterance {
  std::string name;
  dsp::Waveform wav;
  dsp::AcousticFeatures feats;
};

struct TrainConfig {
  int steps = 2000;
  nn::AdamConfig adam;  // lr 3e-4, betas 0.9/0.999
  double clip_norm = 5.0;
  int segment_frames = 200;  // 1 s of audio
  std::uint64_t seed = 42;
  int checkpoint_every = 500;
};

struct LossCurveRow {
  int step;
  LossReport loss;
};

struct TrainResult {
  std::vector<LossCurveRow> curve;
  std::string checkpoint_path;
  std::int64_t adam_skipped = 0;
};

// Batch-size-1 Adam over random frame-aligned segments. Writes the loss
// curve CSV and keeps <out_dir>/model.nsfckpt updated (initial state, every
// checkpoint_every steps, and on completion), so a usable checkpoint
// survives an abort on a non-finite loss. `should_stop`, when set, is
// polled after each recorded row.
TrainResult train(NsfModel& model, const std::vector<Utterance>& data,
                  const TrainConfig& cfg, const std::string& out_dir,
                  const std::string& meta_json,
                  const std::function<bool(int, const LossReport&)>& should_stop = {});

// One-shot generation; output clipped to [-1, 1].
dsp::Waveform synthesize(NsfModel& model, const dsp::AcousticFeatures& feats,
                         std::uint64_t seed);

// Names of parameters whose gradient buffer is missing or non-finite.
std::vector<std::string> params_without_finite_grad(nn::ParameterStore& params);

}  // namespace hnsf

#endif  // HNSF_MODEL_HPP_
