#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace molflow {

// 1-D real signal in [-1, 1] with a sample rate.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;
};

enum class Window { hann };

struct StftConfig {
  int fft_bins = 1024;
  int hop = 256;
  Window window = Window::hann;

  void validate() const {
    if (fft_bins < 2 || (fft_bins & (fft_bins - 1)) != 0)
      throw std::invalid_argument("StftConfig: fft_bins must be a power of two");
    if (hop < 1 || hop > fft_bins)
      throw std::invalid_argument("StftConfig: hop must be in [1, fft_bins]");
  }
  int bins() const { return fft_bins / 2 + 1; }
};

// One-sided magnitude spectrogram, frames x bins row-major.
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<double> mag;

  double at(int f, int k) const { return mag[static_cast<size_t>(f) * bins + k]; }
};

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// In-place radix-2 complex FFT; sizes must be equal powers of two.
void fft_inplace(std::span<double> re, std::span<double> im);

// Magnitudes of windowed DFT frames. Throws if the signal is shorter than
// one frame.
Spectrogram stft_magnitude(const Waveform& w, const StftConfig& cfg);

// || |STFT(x)| - |STFT(x_hat)| ||_F / sqrt(frames): per-frame RMS of the
// magnitude difference, so values are comparable across clip lengths.
double l2_spectral_distance(const Waveform& x, const Waveform& x_hat, const StftConfig& cfg);

}  // namespace molflow
