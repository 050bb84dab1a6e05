// Command-line front end for the molflow pipeline:
//   corpus | train-teacher | distill | synthesize | evaluate
// Exit codes: 0 ok, 1 user error, 2 numerical failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "molflow/commands.hpp"
#include "molflow/errors.hpp"
#include "molflow/wav.hpp"

namespace {

molflow::ExperimentConfig load_config(const std::string& path, bool have_seed, uint64_t seed) {
  molflow::ExperimentConfig cfg = molflow::ExperimentConfig::load(path);
  if (have_seed) cfg.seed = seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixture-of-logistics flow vocoder: corpus generation, teacher training, "
               "distillation, synthesis and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  bool have_seed = false;
  app.add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    have_seed = true;
  });

  auto* c_corpus = app.add_subcommand("corpus", "generate the synthetic corpus");
  std::string out_dir;
  c_corpus->add_option("--out", out_dir, "output directory")->required();

  auto* c_teacher = app.add_subcommand("train-teacher", "fit the teacher by maximum likelihood");
  std::string corpus_dir, out_path;
  c_teacher->add_option("--corpus", corpus_dir, "corpus directory")->required();
  c_teacher->add_option("--out", out_path, "output checkpoint path")->required();

  auto* c_distill = app.add_subcommand("distill", "distill a student flow from a teacher");
  std::string teacher_ckpt, resume_ckpt, kind_str = "non-affine";
  c_distill->add_option("--teacher", teacher_ckpt, "teacher checkpoint")->required();
  c_distill->add_option("--corpus", corpus_dir, "corpus directory")->required();
  c_distill->add_option("--out", out_path, "output checkpoint path")->required();
  c_distill->add_option("--kind", kind_str, "transform kind")
      ->check(CLI::IsMember({"affine", "non-affine"}));
  c_distill->add_option("--resume", resume_ckpt, "continue from this student checkpoint");

  auto* c_synth = app.add_subcommand("synthesize", "draw noise and run the flow forward once");
  std::string student_ckpt, cond_wav;
  int length = 0, sample_rate = 2000;
  uint64_t synth_seed = 1;
  c_synth->add_option("--student", student_ckpt, "student checkpoint")->required();
  c_synth->add_option("--out", out_path, "output WAV path")->required();
  c_synth->add_option("--cond-wav", cond_wav, "derive conditioning from this WAV");
  c_synth->add_option("--length", length, "length in samples (zero conditioning)");
  c_synth->add_option("--sample-rate", sample_rate, "sample rate for zero conditioning");
  c_synth->add_option("--synth-seed", synth_seed, "noise seed");

  auto* c_eval = app.add_subcommand("evaluate", "objective metrics against a corpus");
  std::string json_out;
  c_eval->add_option("--student", student_ckpt, "student checkpoint")->required();
  c_eval->add_option("--teacher", teacher_ckpt, "teacher checkpoint")->required();
  c_eval->add_option("--corpus", corpus_dir, "corpus directory")->required();
  c_eval->add_option("--json", json_out, "also write a machine-readable report here");

  CLI11_PARSE(app, argc, argv);

  try {
    const molflow::ExperimentConfig cfg = load_config(config_path, have_seed, seed);
    if (c_corpus->parsed()) {
      molflow::cmd_corpus(cfg, out_dir, std::cerr);
    } else if (c_teacher->parsed()) {
      molflow::cmd_train_teacher(cfg, corpus_dir, out_path, std::cerr);
    } else if (c_distill->parsed()) {
      const auto kind = kind_str == "affine" ? molflow::TransformKind::affine
                                             : molflow::TransformKind::non_affine;
      molflow::cmd_distill(cfg, kind, teacher_ckpt, corpus_dir, out_path, resume_ckpt,
                           std::cerr);
    } else if (c_synth->parsed()) {
      molflow::SynthesizeOptions opt;
      opt.cond_wav = cond_wav;
      opt.length = length;
      opt.sample_rate = sample_rate;
      opt.seed = synth_seed;
      molflow::cmd_synthesize(student_ckpt, opt, out_path, std::cerr);
    } else if (c_eval->parsed()) {
      const molflow::EvaluateReport rep =
          molflow::cmd_evaluate(cfg, student_ckpt, teacher_ckpt, corpus_dir, std::cerr);
      std::cout << rep.table();
      if (!json_out.empty()) {
        std::ofstream os(json_out, std::ios::binary | std::ios::trunc);
        os << rep.to_json().dump(2) << "\n";
        if (!os) throw std::invalid_argument("cannot write " + json_out);
      }
    }
  } catch (const molflow::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
