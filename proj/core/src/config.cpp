#include "hnsf/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace hnsf {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                  where);
    }
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  RunConfig cfg;
  json j = json::parse(text);
  check_keys(j, {"variant", "model", "source", "losses", "optimizer", "train",
                 "seed"},
             "top level");

  if (j.contains("variant")) {
    cfg.model.variant = variant_from_name(j.at("variant").get<std::string>());
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m,
               {"harmonic_blocks", "noise_blocks", "channels",
                "layers_per_block", "conv_kernel", "filter_length", "profile"},
               "model");
    if (m.contains("profile")) {
      const auto profile = m.at("profile").get<std::string>();
      if (profile == "tiny") {
        cfg.model = ModelConfig::tiny(cfg.model.variant);
      } else if (profile != "full") {
        throw std::invalid_argument("config: unknown model profile '" + profile +
                                    "'");
      }
    }
    maybe(m, "harmonic_blocks", cfg.model.harmonic_blocks);
    maybe(m, "noise_blocks", cfg.model.noise_blocks);
    maybe(m, "channels", cfg.model.channels);
    maybe(m, "layers_per_block", cfg.model.layers_per_block);
    maybe(m, "conv_kernel", cfg.model.conv_kernel);
    maybe(m, "filter_length", cfg.model.filter_length);
  }
  if (j.contains("source")) {
    const json& s = j.at("source");
    check_keys(s, {"alpha", "sigma", "harmonics"}, "source");
    maybe(s, "alpha", cfg.model.source.alpha);
    maybe(s, "sigma", cfg.model.source.sigma);
    maybe(s, "harmonics", cfg.model.source.num_harmonics);
  }
  if (j.contains("losses")) {
    const json& l = j.at("losses");
    if (!l.is_array() || l.size() != 3) {
      throw std::invalid_argument("config: losses must be an array of 3 entries");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      check_keys(l[i], {"dft_bins", "frame_length", "frame_shift"}, "losses");
      maybe(l[i], "dft_bins", cfg.model.losses[i].dft_bins);
      maybe(l[i], "frame_length", cfg.model.losses[i].frame_length);
      maybe(l[i], "frame_shift", cfg.model.losses[i].frame_shift);
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    check_keys(o, {"lr", "beta1", "beta2", "eps", "clip_norm"}, "optimizer");
    maybe(o, "lr", cfg.train.adam.lr);
    maybe(o, "beta1", cfg.train.adam.beta1);
    maybe(o, "beta2", cfg.train.adam.beta2);
    maybe(o, "eps", cfg.train.adam.eps);
    maybe(o, "clip_norm", cfg.train.clip_norm);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"steps", "segment_frames", "batch_size", "checkpoint_every"},
               "train");
    maybe(t, "steps", cfg.train.steps);
    maybe(t, "segment_frames", cfg.train.segment_frames);
    maybe(t, "checkpoint_every", cfg.train.checkpoint_every);
    if (t.contains("batch_size") && t.at("batch_size").get<int>() != 1) {
      throw std::invalid_argument("config: only batch_size 1 is supported");
    }
  }
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.train.seed = cfg.seed;
  }

  if (cfg.train.steps < 0) {
    throw std::invalid_argument("config: train.steps must be >= 0");
  }
  if (cfg.train.segment_frames < 1) {
    throw std::invalid_argument("config: train.segment_frames must be >= 1");
  }
  if (cfg.model.filter_length < 3 || cfg.model.filter_length % 2 == 0) {
    throw std::invalid_argument("config: model.filter_length must be odd and >= 3");
  }
  if (cfg.model.harmonic_blocks < 1 || cfg.model.noise_blocks < 1 ||
      cfg.model.channels < 1 || cfg.model.layers_per_block < 1) {
    throw std::invalid_argument("config: model sizes must be positive");
  }
  return cfg;
}

RunConfig run_config_from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["variant"] = variant_name(cfg.model.variant);
  j["model"] = {{"harmonic_blocks", cfg.model.harmonic_blocks},
                {"noise_blocks", cfg.model.noise_blocks},
                {"channels", cfg.model.channels},
                {"layers_per_block", cfg.model.layers_per_block},
                {"conv_kernel", cfg.model.conv_kernel},
                {"filter_length", cfg.model.filter_length}};
  j["source"] = {{"alpha", cfg.model.source.alpha},
                 {"sigma", cfg.model.source.sigma},
                 {"harmonics", cfg.model.source.num_harmonics}};
  j["losses"] = json::array();
  for (const auto& l : cfg.model.losses) {
    j["losses"].push_back({{"dft_bins", l.dft_bins},
                           {"frame_length", l.frame_length},
                           {"frame_shift", l.frame_shift}});
  }
  j["optimizer"] = {{"lr", cfg.train.adam.lr},
                    {"beta1", cfg.train.adam.beta1},
                    {"beta2", cfg.train.adam.beta2},
                    {"eps", cfg.train.adam.eps},
                    {"clip_norm", cfg.train.clip_norm}};
  j["train"] = {{"steps", cfg.train.steps},
                {"segment_frames", cfg.train.segment_frames},
                {"batch_size", 1},
                {"checkpoint_every", cfg.train.checkpoint_every}};
  j["seed"] = cfg.seed;
  return j.dump();
}

}  // namespace hnsf
