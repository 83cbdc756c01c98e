#include "hnsf/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "hnsf/checkpoint.hpp"

namespace hnsf {

using ad::Tensor;

std::array<dsp::StftConfig, 3> default_loss_configs() {
  return {dsp::StftConfig{512, 320, 80}, dsp::StftConfig{128, 80, 40},
          dsp::StftConfig{2048, 1920, 640}};
}

ModelConfig ModelConfig::tiny(Variant v) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.harmonic_blocks = 1;
  cfg.noise_blocks = 1;
  cfg.channels = 16;
  return cfg;
}

// --- spectral loss -------------------------------------------------------

namespace {

// Log amplitude spectra of one zero-padded Hann frame; returns re/im too so
// the backward pass can avoid a second forward FFT.
struct FrameSpectrum {
  std::vector<double> re, im, log_amp;
};

void frame_spectrum(const std::vector<double>& x, std::size_t start,
                    const std::vector<double>& win, std::size_t dft_bins,
                    FrameSpectrum& out) {
  const std::size_t N = dft_bins;
  out.re.assign(N, 0.0);
  out.im.assign(N, 0.0);
  const std::size_t avail =
      start < x.size() ? std::min({win.size(), x.size() - start, N}) : 0;
  for (std::size_t j = 0; j < avail; ++j) out.re[j] = x[start + j] * win[j];
  dsp::fft(out.re, out.im, false);
  const std::size_t bins = N / 2 + 1;
  out.log_amp.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.log_amp[k] =
        std::log(out.re[k] * out.re[k] + out.im[k] * out.im[k] + dsp::kLogFloor);
  }
}

// One resolution of the loss as a custom graph op with an FFT-based
// backward: dL/d(frame) is the real part of the inverse DFT of the
// half-spectrum gradient, unwindowed and overlap-added onto the signal.
Tensor stft_loss_op(const Tensor& generated, const std::vector<double>& reference,
                    const dsp::StftConfig& cfg) {
  const std::size_t Tg = generated.size();
  const std::size_t Tpad = std::max(Tg, reference.size());
  const std::size_t S = static_cast<std::size_t>(cfg.frame_shift);
  const std::size_t N = static_cast<std::size_t>(cfg.dft_bins);
  const std::size_t bins = N / 2 + 1;
  const std::size_t frames = (Tpad + S - 1) / S;
  const std::vector<double> win =
      dsp::hann_window(static_cast<std::size_t>(cfg.frame_length));

  std::vector<double> gen(generated.values().begin(), generated.values().end());
  gen.resize(Tpad, 0.0);
  std::vector<double> ref = reference;
  ref.resize(Tpad, 0.0);

  const double inv_count = 1.0 / static_cast<double>(frames * bins);
  FrameSpectrum sg, sr;
  double loss = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    frame_spectrum(gen, f * S, win, N, sg);
    frame_spectrum(ref, f * S, win, N, sr);
    for (std::size_t k = 0; k < bins; ++k) {
      const double d = sg.log_amp[k] - sr.log_amp[k];
      loss += 0.5 * d * d;
    }
  }
  loss *= inv_count;

  auto backward = [cfg, win, gen, ref, Tg](ad::Node& n) {
    ad::Node& in = *n.inputs[0];
    if (!in.requires_grad) return;
    const std::size_t S = static_cast<std::size_t>(cfg.frame_shift);
    const std::size_t N = static_cast<std::size_t>(cfg.dft_bins);
    const std::size_t bins = N / 2 + 1;
    const std::size_t Tpad = gen.size();
    const std::size_t frames = (Tpad + S - 1) / S;
    const double g_out = n.grad[0];
    const double inv_count = 1.0 / static_cast<double>(frames * bins);
    FrameSpectrum sg, sr;
    std::vector<double> cre(N), cim(N);
    for (std::size_t f = 0; f < frames; ++f) {
      frame_spectrum(gen, f * S, win, N, sg);
      frame_spectrum(ref, f * S, win, N, sr);
      std::fill(cre.begin(), cre.end(), 0.0);
      std::fill(cim.begin(), cim.end(), 0.0);
      for (std::size_t k = 0; k < bins; ++k) {
        const double power =
            sg.re[k] * sg.re[k] + sg.im[k] * sg.im[k] + dsp::kLogFloor;
        const double dy = g_out * inv_count * (sg.log_amp[k] - sr.log_amp[k]);
        const double dpower = dy / power;
        cre[k] = dpower * 2.0 * sg.re[k];
        cim[k] = dpower * 2.0 * sg.im[k];
      }
      // real part of the unnormalized inverse DFT of the half spectrum
      dsp::fft(cre, cim, true);
      const std::size_t start = f * S;
      const std::size_t avail =
          start < Tg ? std::min({win.size(), Tg - start, N}) : 0;
      for (std::size_t j = 0; j < avail; ++j) {
        in.grad[start + j] += win[j] * cre[j] * static_cast<double>(N);
      }
    }
  };
  return ad::custom_op("stft_loss", {generated}, {1, 1}, {loss},
                       std::move(backward));
}

}  // namespace

SpectralLoss spectral_loss(const Tensor& generated,
                           const std::vector<double>& reference,
                           const std::array<dsp::StftConfig, 3>& cfgs) {
  SpectralLoss out;
  Tensor total;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    Tensor li = stft_loss_op(generated, reference, cfgs[i]);
    out.report.per_resolution[i] = li.scalar_value();
    total = i == 0 ? li : ad::add(total, li);
  }
  out.total = total;
  out.report.total = total.scalar_value();
  return out;
}

// --- filter block -----------------------------------------------------------

FilterBlock::FilterBlock(nn::ParameterStore& store, const std::string& prefix,
                         const ModelConfig& cfg, std::mt19937_64& rng)
    : ff_in_(store, prefix + ".ff_in", 1, cfg.channels, rng),
      cond_proj_(store, prefix + ".cond_proj", kConditionDim, cfg.channels, rng),
      ff_out_(store, prefix + ".ff_out", cfg.channels, 1, rng) {
  convs_.reserve(cfg.layers_per_block);
  for (int k = 0; k < cfg.layers_per_block; ++k) {
    const int dilation = 1 << (k % 10);
    convs_.emplace_back(store, prefix + ".conv" + std::to_string(k),
                        cfg.channels, cfg.channels, cfg.conv_kernel, dilation,
                        rng);
  }
}

Tensor FilterBlock::forward(const Tensor& signal, const Tensor& cond) const {
  Tensor h = ff_in_.forward(signal);
  Tensor cp = cond_proj_.forward(cond);
  for (const auto& conv : convs_) {
    h = ad::add(ad::add(conv.forward(h), h), cp);
  }
  return ad::add(ff_out_.forward(h), signal);
}

// --- model -----------------------------------------------------------------

NsfModel::NsfModel(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  std::mt19937_64 rng(init_seed);
  const std::size_t I = static_cast<std::size_t>(cfg_.source.num_harmonics);
  const double bound = nn::uniform_init_bound(I);
  merge_w_ = store_.create("source.merge.w", {I, 1}, rng, bound);
  merge_b_ = store_.create("source.merge.b", {1, 1}, rng, bound);
  cond_net_.emplace(store_, cfg_.variant, rng);
  for (int b = 0; b < cfg_.harmonic_blocks; ++b) {
    harmonic_blocks_.emplace_back(store_, "harmonic.block" + std::to_string(b),
                                  cfg_, rng);
  }
  for (int b = 0; b < cfg_.noise_blocks; ++b) {
    noise_blocks_.emplace_back(store_, "noise.block" + std::to_string(b), cfg_,
                               rng);
  }
  if (cfg_.variant == Variant::base) {
    lp_voiced_ = sinc::design_lowpass(cfg_.voiced_low, cfg_.filter_length);
    hp_voiced_ = sinc::design_highpass(cfg_.voiced_high, cfg_.filter_length);
    lp_unvoiced_ = sinc::design_lowpass(cfg_.unvoiced_low, cfg_.filter_length);
    hp_unvoiced_ = sinc::design_highpass(cfg_.unvoiced_high, cfg_.filter_length);
  }
}

NsfModel::Forward NsfModel::forward(const dsp::AcousticFeatures& feats,
                                    std::mt19937_64& gen_rng) {
  Forward out;
  out.cond = cond_net_->forward(feats);
  const std::size_t T = out.cond.f0_per_sample.size();

  Excitation exc = generate_excitation(out.cond.f0_per_sample, cfg_.source,
                                       gen_rng);
  Tensor p = merge_harmonics(exc, merge_w_, merge_b_);
  for (const auto& block : harmonic_blocks_) {
    p = block.forward(p, out.cond.cond);
  }
  out.harmonic = p;

  Tensor a = Tensor::column(exc.noise);
  for (const auto& block : noise_blocks_) {
    a = block.forward(a, out.cond.cond);
  }
  out.noise = a;

  if (cfg_.variant == Variant::base) {
    out.output = sinc::merge_switched_op(out.harmonic, out.noise,
                                         out.cond.voiced_per_sample, lp_voiced_,
                                         hp_voiced_, lp_unvoiced_, hp_unvoiced_);
    out.low_cutoff.resize(T);
    out.high_cutoff.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      out.low_cutoff[t] =
          out.cond.voiced_per_sample[t] ? cfg_.voiced_low : cfg_.unvoiced_low;
      out.high_cutoff[t] =
          out.cond.voiced_per_sample[t] ? cfg_.voiced_high : cfg_.unvoiced_high;
    }
  } else {
    out.output =
        sinc::merge_op(out.harmonic, out.noise, out.cond.fc, cfg_.filter_length);
    out.low_cutoff.assign(out.cond.fc.values().begin(),
                          out.cond.fc.values().end());
    out.high_cutoff = out.low_cutoff;  // one MVF shared by both filters
  }
  return out;
}

// --- training ---------------------------------------------------------------

namespace {

void write_loss_curve(const std::string& path,
                      const std::vector<LossCurveRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write loss curve: " + path);
  os << "step,L1,L2,L3,total\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.loss.per_resolution[0] << ','
       << r.loss.per_resolution[1] << ',' << r.loss.per_resolution[2] << ','
       << r.loss.total << '\n';
  }
}

struct Segment {
  dsp::AcousticFeatures feats;
  std::vector<double> target;
};

Segment pick_segment(const Utterance& utt, int segment_frames,
                     std::mt19937_64& rng) {
  const std::size_t B = utt.feats.frames();
  const std::size_t want = static_cast<std::size_t>(segment_frames);
  std::size_t b0 = 0, nb = B;
  if (B > want) {
    std::uniform_int_distribution<std::size_t> dist(0, B - want);
    b0 = dist(rng);
    nb = want;
  }
  Segment seg;
  seg.feats.f0.assign(utt.feats.f0.begin() + b0, utt.feats.f0.begin() + b0 + nb);
  seg.feats.mel.assign(utt.feats.mel.begin() + b0 * dsp::kMelBands,
                       utt.feats.mel.begin() + (b0 + nb) * dsp::kMelBands);
  seg.target.assign(nb * kUpsampleFactor, 0.0);
  const std::size_t s0 = b0 * kUpsampleFactor;
  if (s0 < utt.wav.samples.size()) {
    const std::size_t avail =
        std::min(seg.target.size(), utt.wav.samples.size() - s0);
    std::copy_n(utt.wav.samples.begin() + static_cast<std::ptrdiff_t>(s0),
                avail, seg.target.begin());
  }
  return seg;
}

}  // namespace

TrainResult train(NsfModel& model, const std::vector<Utterance>& data,
                  const TrainConfig& cfg, const std::string& out_dir,
                  const std::string& meta_json,
                  const std::function<bool(int, const LossReport&)>& should_stop) {
  if (data.empty()) {
    throw std::invalid_argument("train: need at least one utterance");
  }
  std::filesystem::create_directories(out_dir);
  const std::string ckpt_path =
      (std::filesystem::path(out_dir) / "model.nsfckpt").string();
  const std::string curve_path =
      (std::filesystem::path(out_dir) / "loss_curve.csv").string();

  nn::Adam adam(model.params(), cfg.adam);
  save_checkpoint(ckpt_path, model.params(), &adam, meta_json);

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.checkpoint_path = ckpt_path;

  const int evals = std::max(cfg.steps, 1);
  for (int step = 0; step < evals; ++step) {
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    const Utterance& utt = data[pick(rng)];
    Segment seg = pick_segment(utt, cfg.segment_frames, rng);

    auto fwd = model.forward(seg.feats, rng);
    SpectralLoss loss = spectral_loss(fwd.output, seg.target,
                                      model.config().losses);
    result.curve.push_back({step, loss.report});

    if (!std::isfinite(loss.report.total)) {
      write_loss_curve(curve_path, result.curve);
      result.adam_skipped = adam.skipped_steps();
      throw std::runtime_error(
          "train: non-finite loss at step " + std::to_string(step) +
          "; last good checkpoint kept at " + ckpt_path);
    }

    if (cfg.steps > 0) {
      model.params().zero_grad();
      ad::backward(loss.total);
      nn::clip_grad_norm(model.params(), cfg.clip_norm);
      adam.step();
      if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
        save_checkpoint(ckpt_path, model.params(), &adam, meta_json);
      }
    }
    if (should_stop && should_stop(step, result.curve.back().loss)) break;
  }

  save_checkpoint(ckpt_path, model.params(), &adam, meta_json);
  write_loss_curve(curve_path, result.curve);
  result.adam_skipped = adam.skipped_steps();
  return result;
}

dsp::Waveform synthesize(NsfModel& model, const dsp::AcousticFeatures& feats,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fwd = model.forward(feats, rng);
  dsp::Waveform w;
  w.sample_rate = dsp::kSampleRate;
  w.samples.assign(fwd.output.values().begin(), fwd.output.values().end());
  for (double& s : w.samples) s = std::clamp(s, -1.0, 1.0);
  return w;
}

std::vector<std::string> params_without_finite_grad(nn::ParameterStore& params) {
  std::vector<std::string> missing;
  for (auto& p : params.items()) {
    if (!p.tensor.grad_allocated()) {
      missing.push_back(p.name);
      continue;
    }
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        missing.push_back(p.name);
        break;
      }
    }
  }
  return missing;
}

}  // namespace hnsf
