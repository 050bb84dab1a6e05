#include "molflow/signal.hpp"

#include <cmath>
#include <numbers>

namespace molflow {

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

void fft_inplace(std::span<double> re, std::span<double> im) {
  const size_t n = re.size();
  if (n != im.size() || n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_inplace: size must be a power of two");
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        // direct twiddles keep the accumulated rounding at the ulp level
        const double wr = std::cos(ang * static_cast<double>(k));
        const double wi = std::sin(ang * static_cast<double>(k));
        const size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * wr - im[b] * wi;
        const double ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
}

Spectrogram stft_magnitude(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  const int n = cfg.fft_bins;
  if (static_cast<int>(w.samples.size()) < n)
    throw std::invalid_argument("stft_magnitude: signal shorter than one frame");
  const int frames = (static_cast<int>(w.samples.size()) - n) / cfg.hop + 1;
  const std::vector<double> win = hann_window(n);

  Spectrogram out;
  out.frames = frames;
  out.bins = cfg.bins();
  out.mag.resize(static_cast<size_t>(frames) * out.bins);
  std::vector<double> re(n), im(n);
  for (int f = 0; f < frames; ++f) {
    const int start = f * cfg.hop;
    for (int i = 0; i < n; ++i) {
      re[i] = w.samples[start + i] * win[i];
      im[i] = 0.0;
    }
    fft_inplace(re, im);
    for (int k = 0; k < out.bins; ++k)
      out.mag[static_cast<size_t>(f) * out.bins + k] = std::hypot(re[k], im[k]);
  }
  return out;
}

double l2_spectral_distance(const Waveform& x, const Waveform& x_hat, const StftConfig& cfg) {
  if (x.samples.size() != x_hat.samples.size())
    throw std::invalid_argument("l2_spectral_distance: length mismatch");
  if (x.sample_rate != x_hat.sample_rate)
    throw std::invalid_argument("l2_spectral_distance: sample rate mismatch");
  const Spectrogram a = stft_magnitude(x, cfg);
  const Spectrogram b = stft_magnitude(x_hat, cfg);
  double sq = 0.0;
  for (size_t i = 0; i < a.mag.size(); ++i) {
    const double d = a.mag[i] - b.mag[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(a.frames));
}

}  // namespace molflow
