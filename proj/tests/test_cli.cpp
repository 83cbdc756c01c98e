#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "hnsf/dsp.hpp"
#include "hnsf/feature_io.hpp"
#include "hnsf/wav.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"hnsf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return hnsf::cli::run(static_cast<int>(argv.size()), argv.data());
}

// capture stdout to inspect the config log line
struct CaptureStdout {
  std::stringstream buffer;
  std::streambuf* old;
  CaptureStdout() : old(std::cout.rdbuf(buffer.rdbuf())) {}
  ~CaptureStdout() { std::cout.rdbuf(old); }
  std::string text() { return buffer.str(); }
};

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_test_clip(const std::string& path, std::size_t voiced_frames,
                     std::size_t unvoiced_frames) {
  hnsf::dsp::Waveform w;
  w.samples = testutil::sine_wave(160.0, voiced_frames * 80, 0.45);
  const auto noise = testutil::white_noise(unvoiced_frames * 80, 0.25, 5);
  w.samples.insert(w.samples.end(), noise.begin(), noise.end());
  hnsf::wav_write(w, path);
}

std::size_t line_count(const std::string& path) {
  std::ifstream is(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("unknown flags exit with the usage code") {
  CHECK(run_cli({"filter-inspect", "--bogus", "1"}) == 1);
  CHECK(run_cli({"no-such-command"}) == 1);
  CHECK(run_cli({}) == 1);
}

TEST_CASE("filter-inspect writes 513 rows with unit DC gain on the low-pass") {
  TempDir dir("cli_inspect");
  const std::string csv = dir.file("resp.csv");
  CaptureStdout cap;
  CHECK(run_cli({"filter-inspect", "--fc", "0.5", "--M", "31", "--out", csv}) == 0);
  CHECK(line_count(csv) == 513);
  std::ifstream is(csv);
  std::string first;
  std::getline(is, first);
  double freq, lp_db, hp_db;
  char comma;
  std::istringstream row(first);
  row >> freq >> comma >> lp_db >> comma >> hp_db;
  CHECK(freq == 0.0);
  CHECK(lp_db == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
  CHECK(hp_db < -40.0);  // high-pass blocks DC
  // every run logs the materialized config as a JSON line
  const std::string log = cap.text();
  CHECK(log.find("\"command\":\"filter-inspect\"") != std::string::npos);
  CHECK(log.find("\"alpha\":0.1") != std::string::npos);
}

TEST_CASE("extract writes a readable feature file") {
  TempDir dir("cli_extract");
  write_test_clip(dir.file("clip.wav"), 10, 10);
  CaptureStdout cap;
  CHECK(run_cli({"extract", "--wav", dir.file("clip.wav"), "--out",
                 dir.file("clip.feat")}) == 0);
  const auto feats = hnsf::feature_read(dir.file("clip.feat"));
  CHECK(feats.frames() == 20);
  bool any_voiced = false, any_unvoiced = false;
  for (double f : feats.f0) (f > 0.0 ? any_voiced : any_unvoiced) = true;
  CHECK(any_voiced);
  CHECK(any_unvoiced);
}

TEST_CASE("extract on a missing file is a runtime failure") {
  CHECK(run_cli({"extract", "--wav", "nope.wav", "--out", "x.feat"}) == 2);
}

TEST_CASE("train, synth and mvf round trip through the CLI") {
  TempDir dir("cli_train");
  write_test_clip(dir.file("clip.wav"), 8, 8);
  std::ofstream(dir.file("cfg.json"))
      << R"({"variant":"sinc1","model":{"profile":"tiny"},)"
      << R"("train":{"steps":2,"checkpoint_every":0},"seed":11})";

  CaptureStdout cap;
  CHECK(run_cli({"train", "--config", dir.file("cfg.json"), "--data",
                 dir.path.string(), "--out", dir.file("run")}) == 0);
  const std::string ckpt = dir.file("run/model.nsfckpt");
  CHECK(fs::exists(ckpt));
  CHECK(line_count(dir.file("run/loss_curve.csv")) == 3);  // header + 2 steps

  CHECK(run_cli({"extract", "--wav", dir.file("clip.wav"), "--out",
                 dir.file("clip.feat")}) == 0);
  CHECK(run_cli({"synth", "--ckpt", ckpt, "--feats", dir.file("clip.feat"),
                 "--out", dir.file("resynth.wav"), "--seed", "3"}) == 0);
  const auto wav = hnsf::wav_read(dir.file("resynth.wav"));
  CHECK(wav.samples.size() == 16 * 80);

  // same seed, same output, bit for bit
  CHECK(run_cli({"synth", "--ckpt", ckpt, "--feats", dir.file("clip.feat"),
                 "--out", dir.file("resynth2.wav"), "--seed", "3"}) == 0);
  std::ifstream a(dir.file("resynth.wav"), std::ios::binary);
  std::ifstream b(dir.file("resynth2.wav"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);

  CHECK(run_cli({"mvf", "--ckpt", ckpt, "--feats", dir.file("clip.feat"),
                 "--out", dir.file("mvf.csv")}) == 0);
  CHECK(line_count(dir.file("mvf.csv")) == 17);  // header + 16 frames

  // wrong variant is a runtime failure with a diagnostic
  CHECK(run_cli({"synth", "--ckpt", ckpt, "--feats", dir.file("clip.feat"),
                 "--out", dir.file("no.wav"), "--variant", "base"}) == 2);
}

TEST_CASE("synth with a missing checkpoint fails cleanly") {
  CHECK(run_cli({"synth", "--ckpt", "missing.nsfckpt", "--feats", "x.feat",
                 "--out", "y.wav"}) == 2);
}
