// Command-line surface: extract -> train -> synth plus the inspection
// commands (gradcheck, filter-inspect, mvf). Every run prints the fully
// materialized run configuration as one JSON line before doing anything.

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hnsf/checkpoint.hpp"
#include "hnsf/config.hpp"
#include "hnsf/feature_io.hpp"
#include "hnsf/gradcheck.hpp"
#include "hnsf/model.hpp"
#include "hnsf/sinc_filter.hpp"
#include "hnsf/wav.hpp"

namespace hnsf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void log_run_config(const std::string& command, const RunConfig& cfg,
                    const json& paths) {
  json line = json::parse(run_config_to_json(cfg));
  line["command"] = command;
  line["paths"] = paths;
  std::cout << line.dump() << std::endl;
}

int cmd_extract(const std::string& wav_path, const std::string& out_path) {
  log_run_config("extract", RunConfig::defaults(),
                 {{"wav", wav_path}, {"out", out_path}});
  dsp::Waveform w = wav_read(wav_path);
  dsp::AcousticFeatures feats = dsp::extract_features(w);
  feature_write(feats, out_path);
  std::cout << "wrote " << feats.frames() << " frames to " << out_path
            << std::endl;
  return 0;
}

std::vector<Utterance> load_dataset(const std::string& dir) {
  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      wavs.push_back(entry.path());
    }
  }
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty()) {
    throw std::runtime_error("no .wav files found in " + dir);
  }
  std::vector<Utterance> data;
  for (const auto& p : wavs) {
    Utterance utt;
    utt.name = p.stem().string();
    utt.wav = wav_read(p.string());
    fs::path feat = p;
    feat.replace_extension(".feat");
    utt.feats = fs::exists(feat) ? feature_read(feat.string())
                                 : dsp::extract_features(utt.wav);
    // align the waveform with the feature grid
    utt.wav.samples.resize(utt.feats.frames() * kUpsampleFactor, 0.0);
    data.push_back(std::move(utt));
  }
  return data;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  RunConfig cfg = run_config_from_file(config_path);
  log_run_config("train", cfg,
                 {{"config", config_path}, {"data", data_dir}, {"out", out_dir}});
  auto data = load_dataset(data_dir);
  NsfModel model(cfg.model, cfg.seed);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed + 1;  // training stream distinct from init stream

  json meta;
  meta["variant"] = variant_name(cfg.model.variant);
  meta["config"] = json::parse(run_config_to_json(cfg));
  TrainResult result = train(model, data, tcfg, out_dir, meta.dump());

  std::cout << "trained " << result.curve.size() << " steps, final loss "
            << result.curve.back().loss.total << ", checkpoint at "
            << result.checkpoint_path << std::endl;
  if (result.adam_skipped > 0) {
    std::cout << "skipped " << result.adam_skipped
              << " steps on non-finite gradients" << std::endl;
  }
  return 0;
}

RunConfig config_from_checkpoint(const std::string& ckpt_path,
                                 const std::string& requested_variant) {
  json meta = json::parse(read_checkpoint_meta(ckpt_path));
  if (!meta.contains("config")) {
    throw std::runtime_error(ckpt_path + ": checkpoint carries no config");
  }
  RunConfig cfg = run_config_from_json(meta.at("config").dump());
  if (!requested_variant.empty() &&
      requested_variant != variant_name(cfg.model.variant)) {
    throw std::runtime_error("checkpoint " + ckpt_path + " holds a " +
                             variant_name(cfg.model.variant) +
                             " model but variant '" + requested_variant +
                             "' was requested");
  }
  return cfg;
}

int cmd_synth(const std::string& ckpt_path, const std::string& feats_path,
              const std::string& out_path, std::uint64_t seed,
              const std::string& requested_variant) {
  RunConfig cfg = config_from_checkpoint(ckpt_path, requested_variant);
  log_run_config("synth", cfg,
                 {{"ckpt", ckpt_path}, {"feats", feats_path}, {"out", out_path},
                  {"seed", seed}});
  NsfModel model(cfg.model, cfg.seed);
  load_checkpoint(ckpt_path, model.params(), nullptr);
  dsp::AcousticFeatures feats = feature_read(feats_path);
  dsp::Waveform w = synthesize(model, feats, seed);
  wav_write(w, out_path);
  std::cout << "wrote " << w.samples.size() << " samples ("
            << static_cast<double>(w.samples.size()) / dsp::kSampleRate
            << " s) to " << out_path << std::endl;
  return 0;
}

int cmd_gradcheck(int filter_length, double fc, double eps) {
  log_run_config("gradcheck", RunConfig::defaults(),
                 {{"M", filter_length}, {"fc", fc}, {"eps", eps}});
  bool ok = true;
  auto report = [&ok](const std::string& name, double err, double threshold) {
    const bool pass = err < threshold;
    ok = ok && pass;
    std::cout << (pass ? "ok   " : "FAIL ") << name << ": max rel error " << err
              << " (threshold " << threshold << ")" << std::endl;
  };

  std::vector<double> cutoffs = {0.1, 0.3, 0.5, 0.7, 0.9};
  if (fc > 0.0) cutoffs = {fc};
  double tap_worst = 0.0;
  for (double c : cutoffs) {
    tap_worst = std::max(
        tap_worst, gradcheck::tap_jacobian_rel_error(c, filter_length, eps));
  }
  report("tap jacobian (Mx2 filters, " + std::to_string(cutoffs.size()) +
             " cutoffs)",
         tap_worst, 1e-4);

  report("merge chain (1000 samples)",
         gradcheck::merge_chain_rel_error(1000, filter_length, eps, 7), 1e-3);

  double op_worst = 0.0;
  for (const auto& check : gradcheck::check_all_ops(11)) {
    std::cout << "     op " << check.op << ": " << check.max_rel_error
              << std::endl;
    op_worst = std::max(op_worst, check.max_rel_error);
  }
  report("graph ops", op_worst, 1e-5);

  std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << std::endl;
  return ok ? 0 : 2;
}

int cmd_filter_inspect(double fc, int filter_length, const std::string& out_path) {
  log_run_config("filter-inspect", RunConfig::defaults(),
                 {{"fc", fc}, {"M", filter_length}, {"out", out_path}});
  const auto low = sinc::design_lowpass(fc, filter_length);
  const auto high = sinc::design_highpass(fc, filter_length);
  constexpr std::size_t kDft = 1024;
  const auto low_mag = sinc::magnitude_response(low, kDft);
  const auto high_mag = sinc::magnitude_response(high, kDft);

  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + out_path);
  auto to_db = [](double m) { return 20.0 * std::log10(std::max(m, 1e-12)); };
  for (std::size_t k = 0; k < low_mag.size(); ++k) {
    const double freq = static_cast<double>(k) /
                        static_cast<double>(kDft / 2);
    os << freq << ',' << to_db(low_mag[k]) << ',' << to_db(high_mag[k]) << '\n';
  }
  std::cout << "wrote " << low_mag.size() << " rows to " << out_path
            << std::endl;
  return 0;
}

int cmd_mvf(const std::string& ckpt_path, const std::string& feats_path,
            const std::string& out_path) {
  RunConfig cfg = config_from_checkpoint(ckpt_path, "");
  log_run_config("mvf", cfg,
                 {{"ckpt", ckpt_path}, {"feats", feats_path}, {"out", out_path}});
  if (cfg.model.variant == Variant::base) {
    throw std::runtime_error(
        "mvf export needs a sinc1/sinc2/sinc3 checkpoint; the base variant "
        "has no predicted cutoff");
  }
  NsfModel model(cfg.model, cfg.seed);
  load_checkpoint(ckpt_path, model.params(), nullptr);
  dsp::AcousticFeatures feats = feature_read(feats_path);
  std::mt19937_64 rng(0);
  auto fwd = model.forward(feats, rng);

  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + out_path);
  os << "frame_index,time_sec,v,r,fc_smoothed\n";
  const auto uv = fwd.cond.uv_per_sample;
  const auto r = fwd.cond.residual.values();
  const auto fc = fwd.cond.fc.values();
  for (std::size_t b = 0; b < feats.frames(); ++b) {
    const std::size_t t = b * kUpsampleFactor + kUpsampleFactor / 2;
    os << b << ',' << static_cast<double>(b) * 0.005 << ',' << uv[t] << ','
       << r[t] << ',' << fc[t] << '\n';
  }
  std::cout << "wrote " << feats.frames() << " frames to " << out_path
            << std::endl;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"harmonic-plus-noise source-filter vocoder with trainable "
               "maximum voice frequency"};
  app.require_subcommand(1);

  std::string wav_path, out_path, config_path, data_dir, ckpt_path, feats_path;
  std::string variant;
  std::uint64_t seed = 1234;
  int filter_length = sinc::kDefaultFilterLength;
  double fc = 0.0, fc_inspect = 0.5, eps = 1e-4;

  auto* extract = app.add_subcommand("extract", "extract F0 + mel features");
  extract->add_option("--wav", wav_path, "input 16 kHz mono PCM16 wav")
      ->required();
  extract->add_option("--out", out_path, "output feature file")->required();

  auto* train = app.add_subcommand("train", "train a model on a directory of wavs");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--data", data_dir, "directory of .wav (+optional .feat)")
      ->required();
  train->add_option("--out", out_path, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "synthesize from a checkpoint");
  synth->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  synth->add_option("--feats", feats_path, "feature file")->required();
  synth->add_option("--out", out_path, "output wav")->required();
  synth->add_option("--seed", seed, "generation seed (phases/noise)");
  synth->add_option("--variant", variant, "expected model variant");

  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "finite-difference checks of the analytic gradients");
  gradcheck_cmd->add_option("--M", filter_length, "filter length (odd)");
  gradcheck_cmd->add_option("--fc", fc, "single cutoff to check (default: sweep)");
  gradcheck_cmd->add_option("--eps", eps, "finite-difference step");

  auto* inspect = app.add_subcommand("filter-inspect",
                                     "dump low/high-pass magnitude responses");
  inspect->add_option("--fc", fc_inspect, "normalized cutoff")->required();
  inspect->add_option("--M", filter_length, "filter length (odd)");
  inspect->add_option("--out", out_path, "output CSV")->required();

  auto* mvf = app.add_subcommand("mvf", "export the predicted cutoff trajectory");
  mvf->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  mvf->add_option("--feats", feats_path, "feature file")->required();
  mvf->add_option("--out", out_path, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (extract->parsed()) return cmd_extract(wav_path, out_path);
    if (train->parsed()) return cmd_train(config_path, data_dir, out_path);
    if (synth->parsed())
      return cmd_synth(ckpt_path, feats_path, out_path, seed, variant);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(filter_length, fc, eps);
    if (inspect->parsed())
      return cmd_filter_inspect(fc_inspect, filter_length, out_path);
    if (mvf->parsed()) return cmd_mvf(ckpt_path, feats_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}

}  // namespace hnsf::cli
