#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molflow/corpus.hpp"
#include "molflow/distill.hpp"
#include "molflow/signal.hpp"
#include "molflow/teacher.hpp"

namespace molflow {

struct TeacherTrainConfig {
  int epochs = 10;
  double lr = 1e-3;
  int batch = 4;
  double clip_norm = 10.0;
  double holdout_frac = 0.2;
};

struct StudentConfig {
  std::vector<int> flow_layers{3, 5};  // conditioner depth per flow
  int channels = 16;
  int kernel_size = 2;
  int dilation_cycle = 8;
  int n_mixtures = 10;
};

struct EvalConfig {
  int mc_draws = 200;
};

// Whole-experiment configuration, parseable from one JSON file. Unknown keys
// are rejected at every level.
struct ExperimentConfig {
  uint64_t seed = 1;
  CorpusConfig corpus;
  TeacherConfig teacher;
  TeacherTrainConfig teacher_train;
  StudentConfig student;
  TrainConfig distill;
  StftConfig stft{1024, 256};      // evaluation metric
  StftConfig power_stft{256, 64};  // power-loss spectra at desk clip lengths
  EvalConfig evaluate;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

}  // namespace molflow
