#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hnsf/checkpoint.hpp"
#include "hnsf/config.hpp"
#include "hnsf/feature_io.hpp"
#include "hnsf/model.hpp"
#include "hnsf/wav.hpp"
#include "testutil.hpp"

using namespace hnsf;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(name) {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("wav round trip stays within one quantization step") {
  TempDir dir("test_io_wav");
  dsp::Waveform w;
  const std::size_t n = 4097;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = -1.0 + 2.0 * static_cast<double>(i) / (n - 1);
  }
  wav_write(w, dir.file("ramp.wav"));
  const auto r = wav_read(dir.file("ramp.wav"));
  REQUIRE(r.samples.size() == n);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
    CHECK(std::abs(r.samples[i]) <= 1.0);
  }
}

TEST_CASE("wav writer clips out-of-range samples") {
  TempDir dir("test_io_clip");
  dsp::Waveform w;
  w.samples = {1.7, -2.4, 0.25};
  wav_write(w, dir.file("clip.wav"));
  const auto r = wav_read(dir.file("clip.wav"));
  CHECK(r.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.samples[1] == doctest::Approx(-1.0));
  CHECK(r.samples[2] == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("stereo input is rejected") {
  TempDir dir("test_io_stereo");
  // hand-rolled 2-channel header
  std::ofstream os(dir.file("stereo.wav"), std::ios::binary);
  auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };
  os.write("RIFF", 4); u32(36 + 8); os.write("WAVE", 4);
  os.write("fmt ", 4); u32(16); u16(1); u16(2); u32(16000); u32(64000); u16(4); u16(16);
  os.write("data", 4); u32(8); u32(0); u32(0);
  os.close();
  try {
    wav_read(dir.file("stereo.wav"));
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("mono") != std::string::npos);
  }
}

TEST_CASE("44.1 kHz input is rejected naming the expected rate") {
  TempDir dir("test_io_rate");
  std::ofstream os(dir.file("cd.wav"), std::ios::binary);
  auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };
  os.write("RIFF", 4); u32(36 + 4); os.write("WAVE", 4);
  os.write("fmt ", 4); u32(16); u16(1); u16(1); u32(44100); u32(88200); u16(2); u16(16);
  os.write("data", 4); u32(4); u32(0);
  os.close();
  try {
    wav_read(dir.file("cd.wav"));
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("16000") != std::string::npos);
    CHECK(msg.find("44100") != std::string::npos);
  }
}

TEST_CASE("feature files round trip bit for bit") {
  TempDir dir("test_io_feat");
  dsp::Waveform w;
  w.samples = testutil::sine_wave(180.0, 4000, 0.4);
  const auto feats = dsp::extract_features(w);
  feature_write(feats, dir.file("a.feat"));
  const auto back = feature_read(dir.file("a.feat"));
  REQUIRE(back.frames() == feats.frames());
  // storage is float32; a second round trip must be exact
  feature_write(back, dir.file("b.feat"));
  const auto again = feature_read(dir.file("b.feat"));
  CHECK(again.f0 == back.f0);
  CHECK(again.mel == back.mel);
  // and the first trip is within float32 rounding
  for (std::size_t i = 0; i < feats.mel.size(); ++i) {
    CHECK(back.mel[i] == doctest::Approx(feats.mel[i]).epsilon(1e-6));
  }
  // payload byte length contract: frames * 81 * 4
  CHECK(std::filesystem::file_size(dir.file("a.feat")) == feats.frames() * 81 * 4);
}

TEST_CASE("feature reader rejects a truncated payload") {
  TempDir dir("test_io_trunc");
  dsp::AcousticFeatures feats;
  feats.f0 = {100.0, 0.0};
  feats.mel.assign(160, -3.0);
  feature_write(feats, dir.file("t.feat"));
  std::filesystem::resize_file(dir.file("t.feat"), 100);
  CHECK_THROWS(feature_read(dir.file("t.feat")));
}

TEST_CASE("checkpoints restore parameters and optimizer state exactly") {
  TempDir dir("test_io_ckpt");
  ModelConfig cfg = ModelConfig::tiny(Variant::sinc1);
  NsfModel model(cfg, 7);
  nn::Adam adam(model.params(), {});
  // run two updates so optimizer moments are non-trivial
  std::mt19937_64 rng(8);
  dsp::AcousticFeatures feats;
  feats.f0 = {150.0, 0.0};
  feats.mel = testutil::white_noise(160, 1.0, 9);
  for (int i = 0; i < 2; ++i) {
    auto fwd = model.forward(feats, rng);
    auto loss = spectral_loss(fwd.output, testutil::white_noise(160, 0.3, 10),
                              cfg.losses);
    model.params().zero_grad();
    ad::backward(loss.total);
    adam.step();
  }
  save_checkpoint(dir.file("m.nsfckpt"), model.params(), &adam,
                  R"({"variant":"sinc1"})");

  NsfModel other(cfg, 99);  // different init
  nn::Adam other_adam(other.params(), {});
  const std::string meta =
      load_checkpoint(dir.file("m.nsfckpt"), other.params(), &other_adam);
  CHECK(meta.find("sinc1") != std::string::npos);
  REQUIRE(other.params().items().size() == model.params().items().size());
  for (std::size_t i = 0; i < model.params().items().size(); ++i) {
    const auto& a = model.params().items()[i].tensor;
    const auto& b = other.params().items()[i].tensor;
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  }
  CHECK(other_adam.step_count() == adam.step_count());
  for (std::size_t i = 0; i < model.params().items().size(); ++i) {
    CHECK(adam.moment1(i) == other_adam.moment1(i));
    CHECK(adam.moment2(i) == other_adam.moment2(i));
  }
}

TEST_CASE("loading into a mismatched architecture is rejected") {
  TempDir dir("test_io_mismatch");
  NsfModel small(ModelConfig::tiny(Variant::sinc1), 11);
  save_checkpoint(dir.file("m.nsfckpt"), small.params(), nullptr, "{}");
  ModelConfig big = ModelConfig::tiny(Variant::sinc1);
  big.channels = 24;
  NsfModel other(big, 12);
  CHECK_THROWS(load_checkpoint(dir.file("m.nsfckpt"), other.params(), nullptr));

  NsfModel base(ModelConfig::tiny(Variant::base), 13);
  // base lacks the mvf parameters present in a sinc checkpoint; loading a
  // base checkpoint into a sinc model must fail on the missing parameter
  save_checkpoint(dir.file("b.nsfckpt"), base.params(), nullptr, "{}");
  NsfModel sinc(ModelConfig::tiny(Variant::sinc1), 14);
  CHECK_THROWS(load_checkpoint(dir.file("b.nsfckpt"), sinc.params(), nullptr));
}

TEST_CASE("checkpoint files carry the magic header") {
  TempDir dir("test_io_magic");
  NsfModel model(ModelConfig::tiny(Variant::base), 15);
  save_checkpoint(dir.file("m.nsfckpt"), model.params(), nullptr, "{}");
  std::ifstream is(dir.file("m.nsfckpt"), std::ios::binary);
  char magic[8];
  is.read(magic, 8);
  CHECK(std::string(magic, 8) == "NSFCKPT1");
  CHECK_THROWS(read_checkpoint_meta(dir.file("missing.nsfckpt")));
}

TEST_CASE("default run config reproduces the reference constants") {
  const RunConfig cfg = RunConfig::defaults();
  CHECK(cfg.model.source.alpha == 0.1);
  CHECK(cfg.model.source.sigma == 0.003);
  CHECK(cfg.model.source.num_harmonics == 8);
  CHECK(cfg.model.filter_length == 31);
  CHECK(cfg.model.harmonic_blocks == 5);
  CHECK(cfg.model.noise_blocks == 1);
  CHECK(cfg.model.channels == 64);
  CHECK(cfg.train.adam.lr == 3e-4);
  CHECK(cfg.train.adam.beta1 == 0.9);
  CHECK(cfg.train.adam.beta2 == 0.999);
  CHECK(cfg.train.clip_norm == 5.0);
  CHECK(cfg.train.segment_frames == 200);
  const auto& l = cfg.model.losses;
  CHECK(l[0].dft_bins == 512);
  CHECK(l[1].dft_bins == 128);
  CHECK(l[2].dft_bins == 2048);
}

TEST_CASE("run config json round trips and rejects unknown keys") {
  RunConfig cfg = RunConfig::defaults();
  cfg.model.variant = Variant::sinc3;
  cfg.seed = 777;
  const auto text = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json(text);
  CHECK(back.model.variant == Variant::sinc3);
  CHECK(back.seed == 777);
  CHECK(run_config_to_json(back) == text);

  CHECK_THROWS(run_config_from_json(R"({"varant":"sinc1"})"));
  CHECK_THROWS(run_config_from_json(R"({"model":{"chnnels":64}})"));
  CHECK_THROWS(run_config_from_json(R"({"variant":"sinc9"})"));
}

TEST_CASE("tiny profile keyword shrinks the model") {
  const RunConfig cfg = run_config_from_json(
      R"({"variant":"sinc1","model":{"profile":"tiny"},"seed":5})");
  CHECK(cfg.model.channels == 16);
  CHECK(cfg.model.harmonic_blocks == 1);
  CHECK(cfg.model.variant == Variant::sinc1);
  CHECK(cfg.seed == 5);
}
