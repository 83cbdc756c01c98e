// Acoustic feature files: raw little-endian float32 payload, frame-major
// with F0 first then the 80 mel values, plus a JSON sidecar at
// <path>.json recording {frames, f0_dim, mel_dim, frame_shift_ms}.

#ifndef HNSF_FEATURE_IO_HPP_
#define HNSF_FEATURE_IO_HPP_

#include <string>

#include "hnsf/dsp.hpp"

namespace hnsf {

void feature_write(const dsp::AcousticFeatures& feats, const std::string& path);
dsp::AcousticFeatures feature_read(const std::string& path);

}  // namespace hnsf

#endif  // HNSF_FEATURE_IO_HPP_
