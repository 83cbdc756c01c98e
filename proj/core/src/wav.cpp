#include "hnsf/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace hnsf {

namespace {

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void write_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace

dsp::Waveform wav_read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open WAV file: " + path);

  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0) {
    throw std::runtime_error(path + ": not a RIFF file");
  }
  read_u32(is);  // riff size
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0) {
    throw std::runtime_error(path + ": not a WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  while (is.read(tag, 4)) {
    const std::uint32_t chunk_size = read_u32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_u16(is);
      channels = read_u16(is);
      rate = read_u32(is);
      read_u32(is);  // byte rate
      read_u16(is);  // block align
      bits = read_u16(is);
      if (chunk_size > 16) is.ignore(chunk_size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(chunk_size);
      is.read(data.data(), chunk_size);
      if (chunk_size % 2) is.ignore(1);
    } else {
      is.ignore(chunk_size + (chunk_size % 2));
    }
  }
  if (!have_fmt || data.empty()) {
    throw std::runtime_error(path + ": missing fmt or data chunk");
  }
  if (format != 1) {
    throw std::runtime_error(path + ": expected PCM encoding (format 1), got format " +
                             std::to_string(format));
  }
  if (channels != 1) {
    throw std::runtime_error(path + ": expected mono input, got " +
                             std::to_string(channels) + " channels");
  }
  if (bits != 16) {
    throw std::runtime_error(path + ": expected 16-bit samples, got " +
                             std::to_string(bits));
  }
  if (rate != static_cast<std::uint32_t>(dsp::kSampleRate)) {
    throw std::runtime_error(path + ": expected " +
                             std::to_string(dsp::kSampleRate) + " Hz, got " +
                             std::to_string(rate) + " Hz");
  }

  dsp::Waveform w;
  w.sample_rate = dsp::kSampleRate;
  const std::size_t n = data.size() / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::int16_t s;
    std::memcpy(&s, data.data() + 2 * i, 2);
    w.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return w;
}

void wav_write(const dsp::Waveform& w, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open WAV file for writing: " + path);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  write_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32(os, 16);
  write_u16(os, 1);  // PCM
  write_u16(os, 1);  // mono
  write_u32(os, static_cast<std::uint32_t>(w.sample_rate));
  write_u32(os, static_cast<std::uint32_t>(w.sample_rate * 2));
  write_u16(os, 2);
  write_u16(os, 16);
  os.write("data", 4);
  write_u32(os, data_bytes);
  for (double v : w.samples) {
    const double clipped = std::clamp(v, -1.0, 1.0);
    // Quantize against full scale 32768 so the read/32768 round trip stays
    // within one quantization step everywhere.
    const long q = std::lround(clipped * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(
        std::clamp<long>(q, -32768, 32767));
    char b[2] = {static_cast<char>(s & 0xff), static_cast<char>((s >> 8) & 0xff)};
    os.write(b, 2);
  }
  if (!os) throw std::runtime_error("WAV write failed: " + path);
}

}  // namespace hnsf
