#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "molflow/checkpoint.hpp"
#include "molflow/commands.hpp"
#include "molflow/wav.hpp"
#include "test_util.hpp"

using namespace molflow;

namespace {

const char* kTinyConfig = R"({
  "seed": 7,
  "corpus": {"n_clips": 5, "len_min": 1024, "len_max": 1280},
  "teacher": {"layers": 2, "channels": 6, "n_mixtures": 3, "epochs": 3, "batch": 2, "lr": 0.002},
  "student": {"flow_layers": [2], "channels": 4, "n_mixtures": 3},
  "distill": {"iterations": 6, "batch": 2, "clip_len": 256, "lr": 0.001},
  "evaluate": {"mc_draws": 16}
})";

struct CliRun {
  int exit_code = 0;
  std::string stdout_text;
};

CliRun run_cli(const std::string& args, const std::string& dir) {
  const std::string out_file = dir + "/cli_stdout.txt";
  const std::string cmd = std::string(MOLFLOW_CLI_PATH) + " " + args + " > " + out_file + " 2> " +
                          dir + "/cli_stderr.txt";
  const int rc = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream f(out_file, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  r.stdout_text = ss.str();
  return r;
}

std::string write_config(const std::string& dir, const std::string& text) {
  const std::string path = dir + "/cfg.json";
  std::ofstream f(path, std::ios::binary);
  f << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("corpus command writes a deterministic corpus and validates input") {
  const std::string dir = test::scratch_dir("cli_corpus");
  const std::string cfg = write_config(dir, kTinyConfig);

  CHECK(run_cli("--config " + cfg + " corpus --out " + dir + "/c1", dir).exit_code == 0);
  CHECK(slurp(dir + "/c1/manifest.txt").find("clip0000") == 0);

  SUBCASE("rerun is byte-identical") {
    const std::string m1 = slurp(dir + "/c1/manifest.txt");
    const std::string w1 = slurp(dir + "/c1/clip0003.wav");
    CHECK(run_cli("--config " + cfg + " corpus --out " + dir + "/c1", dir).exit_code == 0);
    CHECK(slurp(dir + "/c1/manifest.txt") == m1);
    CHECK(slurp(dir + "/c1/clip0003.wav") == w1);
  }

  SUBCASE("zero clips is a validation error") {
    const std::string bad = write_config(
        dir, R"({"corpus": {"n_clips": 0}})");
    CHECK(run_cli("--config " + bad + " corpus --out " + dir + "/c0", dir).exit_code == 1);
  }

  SUBCASE("unknown config keys are rejected") {
    const std::string bad = write_config(dir, R"({"corpsu": {"n_clips": 3}})");
    CHECK(run_cli("--config " + bad + " corpus --out " + dir + "/c0", dir).exit_code == 1);
  }
}

TEST_CASE("full tiny pipeline through the binary") {
  const std::string dir = test::scratch_dir("cli_pipe");
  const std::string cfg = write_config(dir, kTinyConfig);
  REQUIRE(run_cli("--config " + cfg + " corpus --out " + dir + "/corpus", dir).exit_code == 0);

  SUBCASE("train-teacher fits and logs a falling NLL") {
    REQUIRE(run_cli("--config " + cfg + " train-teacher --corpus " + dir + "/corpus --out " +
                        dir + "/teacher.ckpt",
                    dir)
                .exit_code == 0);
    const std::string log = slurp(dir + "/teacher.ckpt.log");
    double initial = 0.0, final_nll = 0.0;
    std::istringstream ls(log);
    std::string line;
    while (std::getline(ls, line)) {
      if (line.rfind("initial_val_nll=", 0) == 0) initial = std::stod(line.substr(16));
      if (line.rfind("final_val_nll=", 0) == 0) final_nll = std::stod(line.substr(14));
    }
    CHECK(final_nll < initial);

    SUBCASE("distill runs for both kinds and resume continues the step count") {
      REQUIRE(run_cli("--config " + cfg + " distill --teacher " + dir +
                          "/teacher.ckpt --corpus " + dir + "/corpus --out " + dir +
                          "/student.ckpt --kind affine",
                      dir)
                  .exit_code == 0);
      CheckpointHeader h = load_checkpoint_header(dir + "/student.ckpt");
      CHECK(h.kind == "student-affine");
      CHECK(h.step == 6);
      CHECK(h.config.at("kind") == "affine");

      // resuming with a larger budget continues from step 6
      const std::string more = write_config(dir, R"({
        "seed": 7,
        "corpus": {"n_clips": 5, "len_min": 1024, "len_max": 1280},
        "teacher": {"layers": 2, "channels": 6, "n_mixtures": 3, "epochs": 3, "batch": 2, "lr": 0.002},
        "student": {"flow_layers": [2], "channels": 4, "n_mixtures": 3},
        "distill": {"iterations": 9, "batch": 2, "clip_len": 256, "lr": 0.001},
        "evaluate": {"mc_draws": 16}
      })");
      REQUIRE(run_cli("--config " + more + " distill --teacher " + dir +
                          "/teacher.ckpt --corpus " + dir + "/corpus --out " + dir +
                          "/student2.ckpt --kind affine --resume " + dir + "/student.ckpt",
                      dir)
                  .exit_code == 0);
      CheckpointHeader h2 = load_checkpoint_header(dir + "/student2.ckpt");
      CHECK(h2.step == 9);
      const std::string log2 = slurp(dir + "/student2.ckpt.log");
      CHECK(log2.rfind("step=7 ", 0) == 0);  // first logged step after resume
    }

    SUBCASE("evaluate emits a table and matching JSON") {
      REQUIRE(run_cli("--config " + cfg + " distill --teacher " + dir +
                          "/teacher.ckpt --corpus " + dir + "/corpus --out " + dir +
                          "/student.ckpt --kind non-affine",
                      dir)
                  .exit_code == 0);
      const CliRun r = run_cli("--config " + cfg + " evaluate --student " + dir +
                                   "/student.ckpt --teacher " + dir + "/teacher.ckpt --corpus " +
                                   dir + "/corpus --json " + dir + "/report.json",
                               dir);
      REQUIRE(r.exit_code == 0);
      CHECK(r.stdout_text.find("overall") != std::string::npos);
      const auto j = nlohmann::json::parse(slurp(dir + "/report.json"));
      CHECK(j.at("clips").size() == 5);
      CHECK(j.at("overall").contains("ce_ci"));
    }
  }

  SUBCASE("missing corpus is a user error") {
    CHECK(run_cli("--config " + cfg + " train-teacher --corpus " + dir + "/nowhere --out " +
                      dir + "/t.ckpt",
                  dir)
              .exit_code == 1);
  }
}

TEST_CASE("synthesize with an identity student emits clamped logistic noise") {
  const std::string dir = test::scratch_dir("cli_synth");
  // zero-initialized student: the flow is exactly the identity
  ExperimentConfig cfg;
  cfg.student.flow_layers = {2};
  cfg.student.channels = 4;
  FlowStack student = make_student(cfg.student, TransformKind::non_affine, 2, 99);
  test::zero_heads(student);
  save_checkpoint(dir + "/id.ckpt",
                  {"student-non-affine", 0,
                   student_config_json(cfg.student, TransformKind::non_affine, 2)},
                  student.params());

  REQUIRE(run_cli("synthesize --student " + dir + "/id.ckpt --out " + dir +
                      "/a.wav --length 256 --sample-rate 2000 --synth-seed 5",
                  dir)
              .exit_code == 0);
  const Waveform w = wav_read(dir + "/a.wav");
  REQUIRE(w.samples.size() == 256);
  CHECK(w.sample_rate == 2000);

  // reproduce the expected stream: clamp(logistic noise with the same seed)
  Rng rng(5);
  int clamped = 0;
  for (int i = 0; i < 256; ++i) {
    const double expect = std::clamp(sample_logistic(rng, Logistic(0.0, 1.0)), -1.0, 1.0);
    CHECK(std::abs(w.samples[i] - expect) <= 1.0 / 32768.0);
    if (std::abs(expect) == 1.0) ++clamped;
  }
  CHECK(clamped > 0);  // the standard logistic has real mass beyond [-1,1]

  SUBCASE("same seed gives a byte-identical file") {
    REQUIRE(run_cli("synthesize --student " + dir + "/id.ckpt --out " + dir +
                        "/b.wav --length 256 --sample-rate 2000 --synth-seed 5",
                    dir)
                .exit_code == 0);
    CHECK(slurp(dir + "/a.wav") == slurp(dir + "/b.wav"));
  }
  SUBCASE("different seed differs") {
    REQUIRE(run_cli("synthesize --student " + dir + "/id.ckpt --out " + dir +
                        "/c.wav --length 256 --sample-rate 2000 --synth-seed 6",
                    dir)
                .exit_code == 0);
    CHECK(slurp(dir + "/a.wav") != slurp(dir + "/c.wav"));
  }
}

TEST_CASE("corrupted and mismatched checkpoints are rejected") {
  const std::string dir = test::scratch_dir("cli_ckpt");
  SUBCASE("bad magic") {
    std::ofstream f(dir + "/junk.ckpt", std::ios::binary);
    f << "not a checkpoint at all";
    f.close();
    CHECK(run_cli("synthesize --student " + dir + "/junk.ckpt --out " + dir +
                      "/x.wav --length 64",
                  dir)
              .exit_code == 1);
  }
  SUBCASE("version mismatch") {
    ExperimentConfig cfg;
    cfg.student.flow_layers = {1};
    cfg.student.channels = 3;
    FlowStack s = make_student(cfg.student, TransformKind::affine, 2, 1);
    save_checkpoint(dir + "/v.ckpt",
                    {"student-affine", 0, student_config_json(cfg.student, TransformKind::affine, 2)},
                    s.params());
    // bump the stored version field (offset 8, little-endian u32)
    std::fstream f(dir + "/v.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v99 = 99;
    f.write(&v99, 1);
    f.close();
    CHECK(run_cli("synthesize --student " + dir + "/v.ckpt --out " + dir + "/x.wav --length 64",
                  dir)
              .exit_code == 1);
  }
  SUBCASE("teacher checkpoint where a student is expected") {
    Teacher t(TeacherConfig{2, 4, 2, 4, 2}, 2, 3);
    save_checkpoint(dir + "/t.ckpt", {"teacher", 0, teacher_config_json(t.config(), 2)},
                    t.params());
    CHECK(run_cli("synthesize --student " + dir + "/t.ckpt --out " + dir + "/x.wav --length 64",
                  dir)
              .exit_code == 1);
  }
}
