#include "molflow/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "molflow/rng.hpp"

namespace molflow {

void CorpusConfig::validate() const {
  if (n_clips < 1) throw std::invalid_argument("CorpusConfig: n_clips must be >= 1");
  if (sr_min < 1 || sr_max < sr_min) throw std::invalid_argument("CorpusConfig: bad sample rate range");
  if (block < 1) throw std::invalid_argument("CorpusConfig: block must be >= 1");
  if (len_min < block || len_max < len_min)
    throw std::invalid_argument("CorpusConfig: bad length range");
  if (n_sin_min < 1 || n_sin_max < n_sin_min)
    throw std::invalid_argument("CorpusConfig: bad sinusoid count range");
  if (!(gain_lo > 0.0 && gain_hi > gain_lo && gain_hi + gain_jitter <= 1.0))
    throw std::invalid_argument("CorpusConfig: gains must satisfy 0 < lo < hi, hi + jitter <= 1");
}

CondFrames cond_features(std::span<const double> samples, int block) {
  const int n = static_cast<int>(samples.size());
  const int n_blocks = (n + block - 1) / block;
  CondFrames f;
  f.length = n;
  f.channels = 2;
  f.v.resize(static_cast<size_t>(n) * 2);
  for (int b = 0; b < n_blocks; ++b) {
    const int lo = b * block;
    const int hi = std::min(n, lo + block);
    double energy = 0.0;
    int crossings = 0;
    for (int i = lo; i < hi; ++i) {
      energy += samples[i] * samples[i];
      if (i > lo && (samples[i] >= 0.0) != (samples[i - 1] >= 0.0)) ++crossings;
    }
    const double log_e = std::log(energy / (hi - lo) + 1e-6) / 6.0;
    const double zcr = static_cast<double>(crossings) / std::max(1, hi - lo - 1);
    for (int i = lo; i < hi; ++i) {
      f.v[static_cast<size_t>(i) * 2 + 0] = log_e;
      f.v[static_cast<size_t>(i) * 2 + 1] = zcr;
    }
  }
  return f;
}

std::vector<Clip> make_synthetic_corpus(const CorpusConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::vector<Clip> clips;
  clips.reserve(cfg.n_clips);
  for (int ci = 0; ci < cfg.n_clips; ++ci) {
    Clip clip;
    clip.seed = Rng::mix(seed, static_cast<uint64_t>(ci));
    Rng rng(clip.seed);
    {
      std::ostringstream oss;
      oss << "clip" << std::setfill('0') << std::setw(4) << ci;
      clip.id = oss.str();
    }
    const int sr = static_cast<int>(rng.uniform_int(cfg.sr_min, cfg.sr_max));
    int len = static_cast<int>(rng.uniform_int(cfg.len_min, cfg.len_max));
    len -= len % cfg.block;
    const int n_sin = static_cast<int>(rng.uniform_int(cfg.n_sin_min, cfg.n_sin_max));

    std::vector<double> freq(n_sin), amp(n_sin), phase(n_sin);
    for (int s = 0; s < n_sin; ++s) {
      freq[s] = rng.uniform(80.0, 0.4 * sr);
      amp[s] = rng.uniform(0.5, 1.0);
      phase[s] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    std::vector<double> mix(len, 0.0);
    double peak = 0.0;
    for (int i = 0; i < len; ++i) {
      double v = 0.0;
      for (int s = 0; s < n_sin; ++s)
        v += amp[s] * std::sin(2.0 * std::numbers::pi * freq[s] * i / sr + phase[s]);
      mix[i] = v;
      peak = std::max(peak, std::abs(v));
    }
    // Bimodal per-block gain on top of the normalized mix.
    clip.wave.sample_rate = sr;
    clip.wave.samples.resize(len);
    const int n_blocks = len / cfg.block;
    for (int b = 0; b < n_blocks; ++b) {
      const double base = rng.uniform01() < 0.5 ? cfg.gain_lo : cfg.gain_hi;
      const double gain = base + rng.uniform(-cfg.gain_jitter, cfg.gain_jitter);
      for (int i = b * cfg.block; i < (b + 1) * cfg.block; ++i)
        clip.wave.samples[i] = std::clamp(gain * mix[i] / peak, -1.0, 1.0);
    }
    clip.cond = cond_features(clip.wave.samples, cfg.block);
    clip.sine_freqs = freq;
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::string corpus_manifest(const std::vector<Clip>& clips) {
  std::ostringstream oss;
  for (const Clip& c : clips)
    oss << c.id << ' ' << c.seed << ' ' << c.wave.sample_rate << ' ' << c.wave.samples.size()
        << ' ' << c.id << ".wav\n";
  return oss.str();
}

}  // namespace molflow
