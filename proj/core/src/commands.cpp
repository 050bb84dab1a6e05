#include "molflow/commands.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "molflow/distill.hpp"
#include "molflow/errors.hpp"
#include "molflow/wav.hpp"

namespace molflow {

namespace fs = std::filesystem;

namespace {

// Fixed-format floats keep logs byte-identical across runs of the same build.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::invalid_argument("cannot open " + path + " for writing");
  os << text;
  if (!os) throw std::invalid_argument("write failed for " + path);
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FlowStack make_student(const StudentConfig& cfg, TransformKind kind, int cond_channels,
                       uint64_t init_seed) {
  std::vector<ConditionerConfig> layer_cfgs;
  for (int depth : cfg.flow_layers) {
    ConditionerConfig c;
    c.layers = depth;
    c.channels = cfg.channels;
    c.kernel_size = cfg.kernel_size;
    c.dilation_cycle = cfg.dilation_cycle;
    c.n_mixtures = cfg.n_mixtures;
    c.kind = kind;
    layer_cfgs.push_back(c);
  }
  return FlowStack(layer_cfgs, cond_channels, init_seed);
}

nlohmann::json student_config_json(const StudentConfig& cfg, TransformKind kind,
                                   int cond_channels) {
  return {{"flow_layers", cfg.flow_layers},
          {"channels", cfg.channels},
          {"kernel_size", cfg.kernel_size},
          {"dilation_cycle", cfg.dilation_cycle},
          {"n_mixtures", cfg.n_mixtures},
          {"kind", kind == TransformKind::affine ? "affine" : "non-affine"},
          {"cond_channels", cond_channels}};
}

nlohmann::json teacher_config_json(const TeacherConfig& cfg, int cond_channels) {
  return {{"layers", cfg.layers},
          {"channels", cfg.channels},
          {"kernel_size", cfg.kernel_size},
          {"dilation_cycle", cfg.dilation_cycle},
          {"n_mixtures", cfg.n_mixtures},
          {"cond_channels", cond_channels}};
}

FlowStack student_from_checkpoint(const std::string& path, CheckpointHeader* header) {
  CheckpointHeader h = load_checkpoint_header(path);
  if (h.kind != "student-affine" && h.kind != "student-non-affine")
    throw std::invalid_argument("checkpoint " + path + " is not a student checkpoint");
  StudentConfig cfg;
  cfg.flow_layers = h.config.at("flow_layers").get<std::vector<int>>();
  cfg.channels = h.config.at("channels").get<int>();
  cfg.kernel_size = h.config.at("kernel_size").get<int>();
  cfg.dilation_cycle = h.config.at("dilation_cycle").get<int>();
  cfg.n_mixtures = h.config.at("n_mixtures").get<int>();
  const TransformKind kind = h.config.at("kind").get<std::string>() == "affine"
                                 ? TransformKind::affine
                                 : TransformKind::non_affine;
  FlowStack stack = make_student(cfg, kind, h.config.at("cond_channels").get<int>(), 0);
  CheckpointHeader full = load_checkpoint(path, stack.params());
  if (header) *header = full;
  return stack;
}

Teacher teacher_from_checkpoint(const std::string& path, CheckpointHeader* header) {
  CheckpointHeader h = load_checkpoint_header(path);
  if (h.kind != "teacher")
    throw std::invalid_argument("checkpoint " + path + " is not a teacher checkpoint");
  TeacherConfig cfg;
  cfg.layers = h.config.at("layers").get<int>();
  cfg.channels = h.config.at("channels").get<int>();
  cfg.kernel_size = h.config.at("kernel_size").get<int>();
  cfg.dilation_cycle = h.config.at("dilation_cycle").get<int>();
  cfg.n_mixtures = h.config.at("n_mixtures").get<int>();
  Teacher teacher(cfg, h.config.at("cond_channels").get<int>(), 0);
  CheckpointHeader full = load_checkpoint(path, teacher.params());
  if (header) *header = full;
  return teacher;
}

void cmd_corpus(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.corpus.validate();
  fs::create_directories(out_dir);
  const std::vector<Clip> clips = make_synthetic_corpus(cfg.corpus, cfg.seed);
  for (const Clip& c : clips) wav_write((fs::path(out_dir) / (c.id + ".wav")).string(), c.wave);
  write_text_file((fs::path(out_dir) / "manifest.txt").string(), corpus_manifest(clips));
  progress << "corpus: wrote " << clips.size() << " clips to " << out_dir << " in "
           << fmt(elapsed_s(t0)) << "s\n";
}

std::vector<Clip> load_corpus(const std::string& dir, int block) {
  const fs::path manifest = fs::path(dir) / "manifest.txt";
  std::ifstream is(manifest);
  if (!is) throw std::invalid_argument("corpus: cannot open " + manifest.string());
  std::vector<Clip> clips;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Clip c;
    int sr = 0;
    size_t n = 0;
    std::string file;
    if (!(ls >> c.id >> c.seed >> sr >> n >> file))
      throw std::invalid_argument("corpus: malformed manifest line: " + line);
    c.wave = wav_read((fs::path(dir) / file).string());
    if (c.wave.sample_rate != sr || c.wave.samples.size() != n)
      throw std::invalid_argument("corpus: manifest disagrees with " + file);
    c.cond = cond_features(c.wave.samples, block);
    clips.push_back(std::move(c));
  }
  if (clips.empty()) throw std::invalid_argument("corpus: empty manifest in " + dir);
  return clips;
}

void cmd_train_teacher(const ExperimentConfig& cfg, const std::string& corpus_dir,
                       const std::string& out_ckpt, std::ostream& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Clip> clips = load_corpus(corpus_dir, cfg.corpus.block);
  std::vector<TrainExample> data;
  data.reserve(clips.size());
  for (const Clip& c : clips) data.push_back({c.wave.samples, c.cond});

  Teacher teacher(cfg.teacher, 2, Rng::mix(cfg.seed, 0x7eacull));
  MleConfig mle;
  mle.epochs = cfg.teacher_train.epochs;
  mle.lr = cfg.teacher_train.lr;
  mle.batch = cfg.teacher_train.batch;
  mle.clip_norm = cfg.teacher_train.clip_norm;
  mle.holdout_frac = cfg.teacher_train.holdout_frac;
  mle.seed = Rng::mix(cfg.seed, 1);
  const MleReport report = teacher_fit_mle(teacher, data, mle);

  std::ostringstream log;
  log << "initial_val_nll=" << fmt(report.initial_val_nll) << "\n";
  for (size_t i = 0; i < report.train_nll.size(); ++i)
    log << "step=" << (i + 1) << " nll=" << fmt(report.train_nll[i]) << "\n";
  log << "final_val_nll=" << fmt(report.final_val_nll) << "\n";
  write_text_file(out_ckpt + ".log", log.str());
  save_checkpoint(out_ckpt, {"teacher", report.steps, teacher_config_json(cfg.teacher, 2)},
                  teacher.params());
  progress << "train-teacher: " << report.steps << " steps, val NLL "
           << fmt(report.initial_val_nll) << " -> " << fmt(report.final_val_nll) << " in "
           << fmt(elapsed_s(t0)) << "s\n";
}

void cmd_distill(const ExperimentConfig& cfg, TransformKind kind,
                 const std::string& teacher_ckpt, const std::string& corpus_dir,
                 const std::string& out_ckpt, const std::string& resume_ckpt,
                 std::ostream& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  const Teacher teacher = teacher_from_checkpoint(teacher_ckpt);
  const std::vector<Clip> clips = load_corpus(corpus_dir, cfg.corpus.block);
  std::vector<TrainExample> pool;
  pool.reserve(clips.size());
  for (const Clip& c : clips) pool.push_back({c.wave.samples, c.cond});

  int start_step = 0;
  FlowStack student = [&]() {
    if (!resume_ckpt.empty()) {
      CheckpointHeader h;
      FlowStack s = student_from_checkpoint(resume_ckpt, &h);
      start_step = static_cast<int>(h.step);
      return s;
    }
    return make_student(cfg.student, kind, 2, Rng::mix(cfg.seed, 0x57adull));
  }();

  TrainConfig train = cfg.distill;
  train.seed = Rng::mix(cfg.seed, 2 + static_cast<uint64_t>(start_step));

  std::ostringstream log;
  const auto on_step = [&](const DistillRecord& rec) {
    log << "step=" << rec.step << " kld=" << fmt(rec.result.kld) << " ce=" << fmt(rec.result.ce)
        << " h=" << fmt(rec.result.entropy) << " power=" << fmt(rec.result.power)
        << " grad_norm=" << fmt(rec.result.grad_norm) << "\n";
    if (rec.step % 100 == 0)
      progress << "distill: step " << rec.step << " kld=" << fmt(rec.result.kld) << " ("
               << fmt(elapsed_s(t0)) << "s)\n";
  };
  const auto records =
      distill_run(student, teacher, pool, train, cfg.power_stft, start_step, on_step);

  const std::string kind_str =
      kind == TransformKind::affine ? "student-affine" : "student-non-affine";
  const int final_step = records.empty() ? start_step : records.back().step;
  write_text_file(out_ckpt + ".log", log.str());
  save_checkpoint(out_ckpt, {kind_str, final_step, student_config_json(cfg.student, kind, 2)},
                  student.params());
  progress << "distill: finished at step " << final_step << " in " << fmt(elapsed_s(t0))
           << "s\n";
}

void cmd_synthesize(const std::string& student_ckpt, const SynthesizeOptions& opt,
                    const std::string& out_wav, std::ostream& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  const FlowStack student = student_from_checkpoint(student_ckpt);
  CondFrames cond;
  int sample_rate = opt.sample_rate;
  if (!opt.cond_wav.empty()) {
    const Waveform w = wav_read(opt.cond_wav);
    cond = cond_features(w.samples, 32);
    sample_rate = w.sample_rate;
  } else {
    if (opt.length < 1) throw std::invalid_argument("synthesize: length must be positive");
    cond = CondFrames::zeros(opt.length, 2);
  }
  Rng rng(opt.seed);
  std::vector<double> noise(cond.length);
  for (double& v : noise) v = sample_logistic(rng, student.base());
  const StackResult out = stack_forward(noise, cond, student);

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(out.x.size());
  for (size_t i = 0; i < out.x.size(); ++i) w.samples[i] = std::clamp(out.x[i], -1.0, 1.0);
  wav_write(out_wav, w);
  progress << "synthesize: wrote " << w.samples.size() << " samples to " << out_wav << " in "
           << fmt(elapsed_s(t0)) << "s\n";
}

std::string EvaluateReport::table() const {
  std::ostringstream os;
  os << "clip        l2sd          ce [nats/sample]\n";
  for (const PerClip& c : clips)
    os << c.id << "  " << fmt(c.l2sd) << "  " << fmt(c.ce) << " +-" << fmt(c.ce_ci) << "\n";
  os << "overall     " << fmt(l2sd_mean) << " +-" << fmt(l2sd_ci) << "  " << fmt(ce_mean)
     << " +-" << fmt(ce_ci) << "\n";
  return os.str();
}

nlohmann::json EvaluateReport::to_json() const {
  nlohmann::json jc = nlohmann::json::array();
  for (const PerClip& c : clips)
    jc.push_back({{"id", c.id}, {"l2sd", c.l2sd}, {"ce", c.ce}, {"ce_ci", c.ce_ci}});
  return {{"clips", jc},
          {"overall",
           {{"l2sd", l2sd_mean},
            {"l2sd_ci", l2sd_ci},
            {"ce", ce_mean},
            {"ce_ci", ce_ci}}}};
}

EvaluateReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& student_ckpt,
                            const std::string& teacher_ckpt, const std::string& corpus_dir,
                            std::ostream& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  const FlowStack student = student_from_checkpoint(student_ckpt);
  const Teacher teacher = teacher_from_checkpoint(teacher_ckpt);
  const std::vector<Clip> clips = load_corpus(corpus_dir, cfg.corpus.block);

  EvaluateReport rep;
  std::vector<double> l2sds, ces;
  for (size_t i = 0; i < clips.size(); ++i) {
    const Clip& clip = clips[i];
    Rng rng(Rng::mix(cfg.seed, 0xe7a1 + i));
    std::vector<double> noise(clip.cond.length);
    for (double& v : noise) v = sample_logistic(rng, student.base());
    const StackResult out = stack_forward(noise, clip.cond, student);
    Waveform xhat;
    xhat.sample_rate = clip.wave.sample_rate;
    xhat.samples.resize(out.x.size());
    for (size_t k = 0; k < out.x.size(); ++k) xhat.samples[k] = std::clamp(out.x[k], -1.0, 1.0);
    const double l2sd = l2_spectral_distance(clip.wave, xhat, cfg.stft);

    const McEstimate ce = cross_entropy_mc(student, teacher, clip.cond, rng, cfg.evaluate.mc_draws);
    const double per_sample = ce.mean / clip.cond.length;
    EvaluateReport::PerClip pc;
    pc.id = clip.id;
    pc.l2sd = l2sd;
    pc.ce = per_sample;
    pc.ce_ci = 1.96 * ce.se / clip.cond.length;
    rep.clips.push_back(pc);
    l2sds.push_back(l2sd);
    ces.push_back(per_sample);
    progress << "evaluate: " << clip.id << " l2sd=" << fmt(l2sd) << " ce=" << fmt(per_sample)
             << " (" << fmt(elapsed_s(t0)) << "s)\n";
  }
  auto mean_ci = [](const std::vector<double>& xs, double& mean, double& ci) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    const double se = xs.size() > 1 ? std::sqrt(sq / (xs.size() - 1.0) / xs.size()) : 0.0;
    ci = 1.96 * se;
  };
  mean_ci(l2sds, rep.l2sd_mean, rep.l2sd_ci);
  mean_ci(ces, rep.ce_mean, rep.ce_ci);
  return rep;
}

}  // namespace molflow
