#pragma once

#include <stdexcept>
#include <string>

#include "molflow/signal.hpp"

namespace molflow {

enum class WavErrc {
  io_error = 1,
  bad_header,
  unsupported_format,  // stereo, non-16-bit, non-PCM
  truncated,
};

class WavError : public std::runtime_error {
 public:
  WavError(WavErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  WavErrc code() const { return code_; }

 private:
  WavErrc code_;
};

// 16-bit PCM mono little-endian RIFF/WAVE. Samples are scaled by 32767 both
// ways, so write-then-read of quantized data is bit-exact and round-trip
// error is at most half an LSB.
Waveform wav_read(const std::string& path);
void wav_write(const std::string& path, const Waveform& w);

}  // namespace molflow
