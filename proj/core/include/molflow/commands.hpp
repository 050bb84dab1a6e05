#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "molflow/checkpoint.hpp"
#include "molflow/config.hpp"
#include "molflow/flow.hpp"
#include "molflow/teacher.hpp"

namespace molflow {

// Pipeline commands behind the CLI subcommands. Each throws on failure:
// std::invalid_argument / WavError for user errors, NumericalError for
// numerical failures; the CLI maps these to exit codes 1 and 2. Progress and
// timing go to `progress` (not part of the deterministic artifacts).

FlowStack make_student(const StudentConfig& cfg, TransformKind kind, int cond_channels,
                       uint64_t init_seed);

nlohmann::json student_config_json(const StudentConfig& cfg, TransformKind kind,
                                   int cond_channels);
nlohmann::json teacher_config_json(const TeacherConfig& cfg, int cond_channels);

FlowStack student_from_checkpoint(const std::string& path, CheckpointHeader* header = nullptr);
Teacher teacher_from_checkpoint(const std::string& path, CheckpointHeader* header = nullptr);

// Writes <out_dir>/manifest.txt and one WAV per clip; reruns with the same
// seed overwrite byte-identically.
void cmd_corpus(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& progress);

// Loads a corpus directory written by cmd_corpus.
std::vector<Clip> load_corpus(const std::string& dir, int block);

void cmd_train_teacher(const ExperimentConfig& cfg, const std::string& corpus_dir,
                       const std::string& out_ckpt, std::ostream& progress);

void cmd_distill(const ExperimentConfig& cfg, TransformKind kind,
                 const std::string& teacher_ckpt, const std::string& corpus_dir,
                 const std::string& out_ckpt, const std::string& resume_ckpt,
                 std::ostream& progress);

struct SynthesizeOptions {
  std::string cond_wav;  // conditioning derived from this waveform, or
  int length = 0;        // zero conditioning of this length
  int sample_rate = 2000;
  uint64_t seed = 1;
};
void cmd_synthesize(const std::string& student_ckpt, const SynthesizeOptions& opt,
                    const std::string& out_wav, std::ostream& progress);

struct EvaluateReport {
  struct PerClip {
    std::string id;
    double l2sd = 0.0;
    double ce = 0.0;     // nats per sample
    double ce_ci = 0.0;  // 1.96 * s.e. over draws
  };
  std::vector<PerClip> clips;
  double l2sd_mean = 0.0, l2sd_ci = 0.0;
  double ce_mean = 0.0, ce_ci = 0.0;  // CI across clips

  std::string table() const;
  nlohmann::json to_json() const;
};

EvaluateReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& student_ckpt,
                            const std::string& teacher_ckpt, const std::string& corpus_dir,
                            std::ostream& progress);

}  // namespace molflow
