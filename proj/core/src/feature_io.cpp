#include "hnsf/feature_io.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace hnsf {

namespace {
constexpr int kF0Dim = 1;
constexpr int kFrameShiftMs = 5;
}  // namespace

void feature_write(const dsp::AcousticFeatures& feats, const std::string& path) {
  const std::size_t B = feats.frames();
  if (feats.mel.size() != B * dsp::kMelBands) {
    throw std::invalid_argument("feature_write: f0/mel frame counts differ");
  }

  nlohmann::json header;
  header["frames"] = B;
  header["f0_dim"] = kF0Dim;
  header["mel_dim"] = dsp::kMelBands;
  header["frame_shift_ms"] = kFrameShiftMs;
  std::ofstream hs(path + ".json", std::ios::trunc);
  if (!hs) throw std::runtime_error("cannot write feature sidecar: " + path + ".json");
  hs << header.dump() << '\n';

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write feature file: " + path);
  std::vector<float> row(1 + dsp::kMelBands);
  for (std::size_t b = 0; b < B; ++b) {
    row[0] = static_cast<float>(feats.f0[b]);
    for (std::size_t m = 0; m < dsp::kMelBands; ++m) {
      row[1 + m] = static_cast<float>(feats.mel[b * dsp::kMelBands + m]);
    }
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("feature write failed: " + path);
}

dsp::AcousticFeatures feature_read(const std::string& path) {
  std::ifstream hs(path + ".json");
  if (!hs) throw std::runtime_error("cannot open feature sidecar: " + path + ".json");
  nlohmann::json header = nlohmann::json::parse(hs);
  const std::size_t B = header.at("frames").get<std::size_t>();
  const int mel_dim = header.at("mel_dim").get<int>();
  if (mel_dim != dsp::kMelBands) {
    throw std::runtime_error(path + ": expected mel_dim " +
                             std::to_string(dsp::kMelBands) + ", got " +
                             std::to_string(mel_dim));
  }

  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open feature file: " + path);
  const std::size_t row_floats = 1 + dsp::kMelBands;
  std::vector<float> payload(B * row_floats);
  is.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (static_cast<std::size_t>(is.gcount()) != payload.size() * sizeof(float)) {
    throw std::runtime_error(path + ": payload shorter than header promises (" +
                             std::to_string(B) + " frames)");
  }

  dsp::AcousticFeatures feats;
  feats.f0.resize(B);
  feats.mel.resize(B * dsp::kMelBands);
  for (std::size_t b = 0; b < B; ++b) {
    feats.f0[b] = payload[b * row_floats];
    for (std::size_t m = 0; m < dsp::kMelBands; ++m) {
      feats.mel[b * dsp::kMelBands + m] = payload[b * row_floats + 1 + m];
    }
  }
  return feats;
}

}  // namespace hnsf
