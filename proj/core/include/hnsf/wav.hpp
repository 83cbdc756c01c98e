// Strict mono 16 kHz 16-bit PCM RIFF/WAVE codec. Reads normalize by 1/32768;
// writes clip to [-1,1] and quantize to int16.

#ifndef HNSF_WAV_HPP_
#define HNSF_WAV_HPP_

#include <string>

#include "hnsf/dsp.hpp"

namespace hnsf {

dsp::Waveform wav_read(const std::string& path);
void wav_write(const dsp::Waveform& w, const std::string& path);

}  // namespace hnsf

#endif  // HNSF_WAV_HPP_
