#include "molflow/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace molflow {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}
void wr_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}
void wr_tag(std::vector<uint8_t>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

}  // namespace

Waveform wav_read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw WavError(WavErrc::io_error, "wav_read: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw WavError(WavErrc::bad_header, "wav_read: file too small for RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw WavError(WavErrc::bad_header, "wav_read: not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  Waveform out;
  bool have_data = false;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* ch = bytes.data() + pos;
    const uint32_t len = rd_u32(ch + 4);
    const size_t body = pos + 8;
    if (body + len > bytes.size())
      throw WavError(WavErrc::truncated, "wav_read: chunk extends past end of file");
    if (std::memcmp(ch, "fmt ", 4) == 0) {
      if (len < 16) throw WavError(WavErrc::bad_header, "wav_read: fmt chunk too small");
      const uint8_t* p = bytes.data() + body;
      format = rd_u16(p);
      channels = rd_u16(p + 2);
      sample_rate = rd_u32(p + 4);
      bits = rd_u16(p + 14);
      have_fmt = true;
    } else if (std::memcmp(ch, "data", 4) == 0) {
      if (!have_fmt) throw WavError(WavErrc::bad_header, "wav_read: data chunk before fmt");
      if (format != 1) throw WavError(WavErrc::unsupported_format, "wav_read: only PCM supported");
      if (channels != 1) throw WavError(WavErrc::unsupported_format, "wav_read: only mono supported");
      if (bits != 16) throw WavError(WavErrc::unsupported_format, "wav_read: only 16-bit supported");
      const size_t n = len / 2;
      out.samples.resize(n);
      const uint8_t* p = bytes.data() + body;
      for (size_t i = 0; i < n; ++i) {
        const int16_t q = static_cast<int16_t>(rd_u16(p + 2 * i));
        out.samples[i] = static_cast<double>(q) / 32767.0;
      }
      have_data = true;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || !have_data)
    throw WavError(WavErrc::truncated, "wav_read: missing fmt or data chunk");
  out.sample_rate = static_cast<int>(sample_rate);
  return out;
}

void wav_write(const std::string& path, const Waveform& w) {
  if (w.samples.empty()) throw std::invalid_argument("wav_write: empty waveform");
  if (w.sample_rate <= 0) throw std::invalid_argument("wav_write: invalid sample rate");
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  std::vector<uint8_t> b;
  b.reserve(44 + 2 * n);
  wr_tag(b, "RIFF");
  wr_u32(b, 36 + 2 * n);
  wr_tag(b, "WAVE");
  wr_tag(b, "fmt ");
  wr_u32(b, 16);
  wr_u16(b, 1);  // PCM
  wr_u16(b, 1);  // mono
  wr_u32(b, static_cast<uint32_t>(w.sample_rate));
  wr_u32(b, static_cast<uint32_t>(w.sample_rate) * 2);
  wr_u16(b, 2);   // block align
  wr_u16(b, 16);  // bits
  wr_tag(b, "data");
  wr_u32(b, 2 * n);
  for (double s : w.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const int32_t q = static_cast<int32_t>(std::lround(clamped * 32767.0));
    wr_u16(b, static_cast<uint16_t>(static_cast<int16_t>(std::clamp(q, -32768, 32767))));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavError(WavErrc::io_error, "wav_write: cannot open " + path);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!f) throw WavError(WavErrc::io_error, "wav_write: write failed for " + path);
}

}  // namespace molflow
