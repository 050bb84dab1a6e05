#include "molflow/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace molflow {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  if (!j.is_object()) throw std::invalid_argument("config: " + ctx + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw std::invalid_argument("config: unknown key '" + key + "' in " + ctx);
}

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  check_keys(j, {"seed", "corpus", "teacher", "student", "distill", "stft", "power_stft",
                 "evaluate"},
             "top level");
  get_if(j, "seed", c.seed);
  if (j.contains("corpus")) {
    const auto& jc = j.at("corpus");
    check_keys(jc,
               {"n_clips", "sr_min", "sr_max", "len_min", "len_max", "n_sin_min", "n_sin_max",
                "block", "gain_lo", "gain_hi", "gain_jitter"},
               "corpus");
    get_if(jc, "n_clips", c.corpus.n_clips);
    get_if(jc, "sr_min", c.corpus.sr_min);
    get_if(jc, "sr_max", c.corpus.sr_max);
    get_if(jc, "len_min", c.corpus.len_min);
    get_if(jc, "len_max", c.corpus.len_max);
    get_if(jc, "n_sin_min", c.corpus.n_sin_min);
    get_if(jc, "n_sin_max", c.corpus.n_sin_max);
    get_if(jc, "block", c.corpus.block);
    get_if(jc, "gain_lo", c.corpus.gain_lo);
    get_if(jc, "gain_hi", c.corpus.gain_hi);
    get_if(jc, "gain_jitter", c.corpus.gain_jitter);
    c.corpus.validate();
  }
  if (j.contains("teacher")) {
    const auto& jt = j.at("teacher");
    check_keys(jt,
               {"layers", "channels", "kernel_size", "dilation_cycle", "n_mixtures", "epochs",
                "lr", "batch", "clip_norm", "holdout_frac"},
               "teacher");
    get_if(jt, "layers", c.teacher.layers);
    get_if(jt, "channels", c.teacher.channels);
    get_if(jt, "kernel_size", c.teacher.kernel_size);
    get_if(jt, "dilation_cycle", c.teacher.dilation_cycle);
    get_if(jt, "n_mixtures", c.teacher.n_mixtures);
    c.teacher.validate();
    get_if(jt, "epochs", c.teacher_train.epochs);
    get_if(jt, "lr", c.teacher_train.lr);
    get_if(jt, "batch", c.teacher_train.batch);
    get_if(jt, "clip_norm", c.teacher_train.clip_norm);
    get_if(jt, "holdout_frac", c.teacher_train.holdout_frac);
  }
  if (j.contains("student")) {
    const auto& js = j.at("student");
    check_keys(js, {"flow_layers", "channels", "kernel_size", "dilation_cycle", "n_mixtures"},
               "student");
    get_if(js, "flow_layers", c.student.flow_layers);
    get_if(js, "channels", c.student.channels);
    get_if(js, "kernel_size", c.student.kernel_size);
    get_if(js, "dilation_cycle", c.student.dilation_cycle);
    get_if(js, "n_mixtures", c.student.n_mixtures);
    if (c.student.flow_layers.empty())
      throw std::invalid_argument("config: student.flow_layers must be nonempty");
  }
  if (j.contains("distill")) {
    const auto& jd = j.at("distill");
    check_keys(jd,
               {"lr", "batch", "clip_len", "iterations", "mc_samples", "power_loss_weight",
                "clip_norm"},
               "distill");
    get_if(jd, "lr", c.distill.lr);
    get_if(jd, "batch", c.distill.batch);
    get_if(jd, "clip_len", c.distill.clip_len);
    get_if(jd, "iterations", c.distill.iterations);
    get_if(jd, "mc_samples", c.distill.mc_samples);
    get_if(jd, "power_loss_weight", c.distill.power_loss_weight);
    get_if(jd, "clip_norm", c.distill.clip_norm);
    c.distill.validate();
  }
  auto read_stft = [&](const char* key, StftConfig& cfg) {
    if (!j.contains(key)) return;
    const auto& js = j.at(key);
    check_keys(js, {"fft_bins", "hop"}, key);
    get_if(js, "fft_bins", cfg.fft_bins);
    get_if(js, "hop", cfg.hop);
    cfg.validate();
  };
  read_stft("stft", c.stft);
  read_stft("power_stft", c.power_stft);
  if (j.contains("evaluate")) {
    const auto& je = j.at("evaluate");
    check_keys(je, {"mc_draws"}, "evaluate");
    get_if(je, "mc_draws", c.evaluate.mc_draws);
    if (c.evaluate.mc_draws < 2)
      throw std::invalid_argument("config: evaluate.mc_draws must be >= 2");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  return {
      {"seed", seed},
      {"corpus",
       {{"n_clips", corpus.n_clips},
        {"sr_min", corpus.sr_min},
        {"sr_max", corpus.sr_max},
        {"len_min", corpus.len_min},
        {"len_max", corpus.len_max},
        {"n_sin_min", corpus.n_sin_min},
        {"n_sin_max", corpus.n_sin_max},
        {"block", corpus.block},
        {"gain_lo", corpus.gain_lo},
        {"gain_hi", corpus.gain_hi},
        {"gain_jitter", corpus.gain_jitter}}},
      {"teacher",
       {{"layers", teacher.layers},
        {"channels", teacher.channels},
        {"kernel_size", teacher.kernel_size},
        {"dilation_cycle", teacher.dilation_cycle},
        {"n_mixtures", teacher.n_mixtures},
        {"epochs", teacher_train.epochs},
        {"lr", teacher_train.lr},
        {"batch", teacher_train.batch},
        {"clip_norm", teacher_train.clip_norm},
        {"holdout_frac", teacher_train.holdout_frac}}},
      {"student",
       {{"flow_layers", student.flow_layers},
        {"channels", student.channels},
        {"kernel_size", student.kernel_size},
        {"dilation_cycle", student.dilation_cycle},
        {"n_mixtures", student.n_mixtures}}},
      {"distill",
       {{"lr", distill.lr},
        {"batch", distill.batch},
        {"clip_len", distill.clip_len},
        {"iterations", distill.iterations},
        {"mc_samples", distill.mc_samples},
        {"power_loss_weight", distill.power_loss_weight},
        {"clip_norm", distill.clip_norm}}},
      {"stft", {{"fft_bins", stft.fft_bins}, {"hop", stft.hop}}},
      {"power_stft", {{"fft_bins", power_stft.fft_bins}, {"hop", power_stft.hop}}},
      {"evaluate", {{"mc_draws", evaluate.mc_draws}}},
  };
}

}  // namespace molflow
