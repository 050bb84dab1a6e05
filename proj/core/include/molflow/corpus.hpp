#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molflow/conditioner.hpp"
#include "molflow/signal.hpp"

namespace molflow {

// Synthetic training material: short clips mixing 2-3 sinusoids with random
// phase and a bimodal per-block amplitude jitter, so per-sample conditionals
// are genuinely multimodal.
struct CorpusConfig {
  int n_clips = 50;
  int sr_min = 1000;
  int sr_max = 4000;
  int len_min = 1024;  // rounded down to a block multiple
  int len_max = 2048;
  int n_sin_min = 2;
  int n_sin_max = 3;
  int block = 32;  // conditioning frame size in samples
  double gain_lo = 0.35;
  double gain_hi = 0.85;
  double gain_jitter = 0.05;

  void validate() const;
};

struct Clip {
  std::string id;
  uint64_t seed = 0;
  Waveform wave;
  CondFrames cond;                // per-sample, block-constant
  std::vector<double> sine_freqs;  // generator metadata, not persisted
};

// Conditioning features, constant within each block: channel 0 a scaled
// log-energy, channel 1 the zero-crossing rate as a cheap pitch proxy.
CondFrames cond_features(std::span<const double> samples, int block);

std::vector<Clip> make_synthetic_corpus(const CorpusConfig& cfg, uint64_t seed);

// Line-delimited manifest: id seed sample_rate n_samples file.
std::string corpus_manifest(const std::vector<Clip>& clips);

}  // namespace molflow
