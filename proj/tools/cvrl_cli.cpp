// Command-line front end; talks to the library exclusively through the C API.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvrl.h"

namespace {

[[noreturn]] void fail(cvrl_status status) {
  std::fprintf(stderr, "error (%s): %s\n", cvrl_status_name(status), cvrl_last_error());
  std::exit(1);
}

void check(cvrl_status status) {
  if (status != CVRL_OK) fail(status);
}

// Load --config JSON if given, else start from a bare schema header, then let
// the caller apply flag overrides.
nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return {{"schema_version", 1}};
  std::ifstream f(path);
  if (!f.good()) {
    std::fprintf(stderr, "error: cannot read config file '%s'\n", path.c_str());
    std::exit(1);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  nlohmann::json j = nlohmann::json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) {
    std::fprintf(stderr, "error: config file '%s' is not valid JSON\n", path.c_str());
    std::exit(1);
  }
  return j;
}

struct SeedOpt {
  std::uint64_t value = 0;
  bool set = false;
};

void add_seed(CLI::App* cmd, SeedOpt& seed) {
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&seed](const std::uint64_t& v) {
        seed.value = v;
        seed.set = true;
      },
      "override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale contrastive video representation learning"};
  app.require_subcommand(1);

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic labeled-motion dataset");
  std::string gen_config, gen_out = "dataset.bin";
  int gen_classes = 4, gen_per_class = 200, gen_frames = 128, gen_h = 64, gen_w = 64;
  SeedOpt gen_seed;
  gen->add_option("--config", gen_config, "JSON config file");
  gen->add_option("--classes", gen_classes, "number of classes");
  gen->add_option("--per-class", gen_per_class, "videos per class");
  gen->add_option("--frames", gen_frames, "frames per video");
  gen->add_option("--height", gen_h, "frame height");
  gen->add_option("--width", gen_w, "frame width");
  add_seed(gen, gen_seed);
  gen->add_option("--out", gen_out, "output dataset path");

  // ---- pretrain ----
  auto* pre = app.add_subcommand("pretrain", "contrastive pretraining on a dataset");
  std::string pre_config, pre_out = "run", pre_dataset, pre_dump_lr;
  SeedOpt pre_seed;
  pre->add_option("--config", pre_config, "JSON config file");
  pre->add_option("--dataset", pre_dataset, "override the config dataset path");
  add_seed(pre, pre_seed);
  pre->add_option("--out", pre_out, "output directory (checkpoint + metrics.csv)");
  pre->add_option("--dump-lr", pre_dump_lr, "write the (step, lr) schedule CSV and exit");

  // ---- linear-eval ----
  auto* lin = app.add_subcommand("linear-eval", "linear probe on frozen backbone features");
  std::string lin_config, lin_train, lin_eval, lin_checkpoint, lin_model;
  SeedOpt lin_seed;
  lin->add_option("--config", lin_config, "JSON config file");
  lin->add_option("--train-data", lin_train, "training dataset")->required();
  lin->add_option("--eval-data", lin_eval, "evaluation dataset")->required();
  lin->add_option("--checkpoint", lin_checkpoint, "pretrained encoder checkpoint (empty = random)");
  add_seed(lin, lin_seed);
  lin->add_option("--model-out", lin_model, "save the probed model here");

  // ---- semi-eval ----
  auto* semi = app.add_subcommand("semi-eval",
                                  "semi-supervised protocol: balanced subset + fine-tune");
  std::string semi_config, semi_train, semi_eval, semi_checkpoint, semi_model;
  double semi_fraction = 0.1;
  bool semi_scratch = false;
  SeedOpt semi_seed;
  semi->add_option("--config", semi_config, "JSON config file");
  semi->add_option("--train-data", semi_train, "training dataset")->required();
  semi->add_option("--eval-data", semi_eval, "evaluation dataset")->required();
  semi->add_option("--checkpoint", semi_checkpoint, "pretrained encoder checkpoint");
  semi->add_option("--fraction", semi_fraction, "labeled fraction per class (0, 1]");
  semi->add_flag("--from-scratch", semi_scratch, "ignore the checkpoint; random init");
  add_seed(semi, semi_seed);
  semi->add_option("--model-out", semi_model, "save the fine-tuned model here");

  // ---- fine-tune ----
  auto* ft = app.add_subcommand("fine-tune", "fine-tune all layers on the full training set");
  std::string ft_config, ft_train, ft_eval, ft_checkpoint, ft_model;
  bool ft_scratch = false;
  SeedOpt ft_seed;
  ft->add_option("--config", ft_config, "JSON config file");
  ft->add_option("--train-data", ft_train, "training dataset")->required();
  ft->add_option("--eval-data", ft_eval, "evaluation dataset")->required();
  ft->add_option("--checkpoint", ft_checkpoint, "pretrained encoder checkpoint");
  ft->add_flag("--from-scratch", ft_scratch, "ignore the checkpoint; random init");
  add_seed(ft, ft_seed);
  ft->add_option("--model-out", ft_model, "save the fine-tuned model here");

  // ---- dense-predict ----
  auto* dense = app.add_subcommand("dense-predict",
                                   "averaged multi-clip / multi-crop class logits for one video");
  std::string dense_model, dense_data;
  int dense_video = 0, dense_clips = 10, dense_crops = 3;
  dense->add_option("--model", dense_model, "trained model file")->required();
  dense->add_option("--data", dense_data, "dataset holding the video")->required();
  dense->add_option("--video", dense_video, "video id");
  dense->add_option("--clips", dense_clips, "number of dense clips");
  dense->add_option("--crops", dense_crops, "spatial crops per clip (1 or 3)");

  // ---- sample-hist ----
  auto* hist = app.add_subcommand("sample-hist", "histogram of temporal-interval samples");
  std::string hist_preset = "dec-linear", hist_out = "hist.csv";
  int hist_t = 218;
  long hist_n = 100000;
  SeedOpt hist_seed;
  hist->add_option("--preset", hist_preset,
                   "dec-linear|dec-sqrt|dec-quad|uniform|inc-linear|inc-quad");
  hist->add_option("--T", hist_t, "interval domain upper bound");
  hist->add_option("--n", hist_n, "number of samples");
  add_seed(hist, hist_seed);
  hist->add_option("--out", hist_out, "output CSV path");

  // ---- augment-preview ----
  auto* prev = app.add_subcommand("augment-preview",
                                  "write original and augmented frames as PPM images");
  std::string prev_in, prev_out = "preview";
  int prev_video = 0, prev_len = 16, prev_stride = 2, prev_target = 32;
  SeedOpt prev_seed;
  prev->add_option("--in", prev_in, "dataset path")->required();
  prev->add_option("--video", prev_video, "video id");
  add_seed(prev, prev_seed);
  prev->add_option("--clip-length", prev_len, "frames per clip");
  prev->add_option("--stride", prev_stride, "temporal stride");
  prev->add_option("--target", prev_target, "augmentation target size");
  prev->add_option("--out", prev_out, "output directory");

  // ---- shape-check ----
  auto* shape = app.add_subcommand("shape-check", "print the R3D-50 stage-shape table");
  int shape_t = 32, shape_s = 224;
  shape->add_option("--frames", shape_t, "input frames");
  shape->add_option("--size", shape_s, "input spatial size");

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    nlohmann::json cfg = load_config(gen_config);
    int classes = cfg.value("num_classes", gen_classes);
    int per_class = cfg.value("videos_per_class", gen_per_class);
    int frames = cfg.value("t_total", gen_frames);
    int height = cfg.value("height", gen_h);
    int width = cfg.value("width", gen_w);
    std::uint64_t seed = gen_seed.set ? gen_seed.value : cfg.value("seed", 0ull);
    if (gen->count("--classes")) classes = gen_classes;
    if (gen->count("--per-class")) per_class = gen_per_class;
    if (gen->count("--frames")) frames = gen_frames;
    if (gen->count("--height")) height = gen_h;
    if (gen->count("--width")) width = gen_w;
    cvrl_dataset* ds = nullptr;
    check(cvrl_dataset_generate(classes, per_class, frames, height, width, seed, &ds));
    check(cvrl_dataset_save(ds, gen_out.c_str()));
    int32_t n = 0;
    cvrl_dataset_info(ds, &n, nullptr, nullptr, nullptr, nullptr);
    cvrl_dataset_free(ds);
    std::printf("wrote %d videos (%d classes x %d, %dx%dx%d) to %s\n", n, classes, per_class,
                frames, height, width, gen_out.c_str());
    return 0;
  }

  if (*pre) {
    nlohmann::json cfg = load_config(pre_config);
    if (!pre_dataset.empty()) cfg["dataset"] = pre_dataset;
    if (pre_seed.set) cfg["seed"] = pre_seed.value;
    std::string text = cfg.dump();
    if (!pre_dump_lr.empty()) {
      check(cvrl_lr_schedule_dump(text.c_str(), pre_dump_lr.c_str()));
      std::printf("wrote schedule to %s\n", pre_dump_lr.c_str());
      return 0;
    }
    check(cvrl_pretrain(text.c_str(), pre_out.c_str()));
    std::printf("checkpoint: %s/checkpoint.bin\nmetrics: %s/metrics.csv\n", pre_out.c_str(),
                pre_out.c_str());
    return 0;
  }

  auto run_eval = [&](CLI::App* cmd, const std::string& config_path, const std::string& train,
                      const std::string& eval_path, const std::string& checkpoint,
                      const SeedOpt& seed, const std::string& model_out, double fraction,
                      bool scratch, bool probe) {
    nlohmann::json cfg = load_config(config_path);
    if (cmd->count("--checkpoint")) cfg["checkpoint"] = checkpoint;
    if (seed.set) cfg["seed"] = seed.value;
    if (fraction < 1.0) cfg["label_fraction"] = fraction;
    std::string text = cfg.dump();
    double top1 = 0.0;
    if (probe) {
      check(cvrl_linear_eval(text.c_str(), train.c_str(), eval_path.c_str(),
                             model_out.empty() ? nullptr : model_out.c_str(), &top1));
    } else {
      check(cvrl_fine_tune(text.c_str(), train.c_str(), eval_path.c_str(), fraction,
                           scratch ? 1 : 0, model_out.empty() ? nullptr : model_out.c_str(),
                           &top1));
    }
    std::printf("top1 %.4f\n", top1);
  };

  if (*lin) {
    run_eval(lin, lin_config, lin_train, lin_eval, lin_checkpoint, lin_seed, lin_model, 1.0,
             false, true);
    return 0;
  }
  if (*semi) {
    run_eval(semi, semi_config, semi_train, semi_eval, semi_checkpoint, semi_seed, semi_model,
             semi_fraction, semi_scratch, false);
    return 0;
  }
  if (*ft) {
    run_eval(ft, ft_config, ft_train, ft_eval, ft_checkpoint, ft_seed, ft_model, 1.0, ft_scratch,
             false);
    return 0;
  }

  if (*dense) {
    std::vector<double> logits(256);
    int32_t num_classes = 0, predicted = 0;
    check(cvrl_dense_predict(dense_model.c_str(), dense_data.c_str(), dense_video, dense_clips,
                             dense_crops, logits.data(), static_cast<int32_t>(logits.size()),
                             &num_classes, &predicted));
    std::printf("video %d predicted class %d\nlogits:", dense_video, predicted);
    for (int c = 0; c < num_classes; ++c) std::printf(" %.6f", logits[c]);
    std::printf("\n");
    return 0;
  }

  if (*hist) {
    check(cvrl_sample_hist(hist_preset.c_str(), hist_t, hist_n,
                           hist_seed.set ? hist_seed.value : 0, hist_out.c_str()));
    std::printf("wrote %ld samples over [0, %d] to %s\n", hist_n, hist_t, hist_out.c_str());
    return 0;
  }

  if (*prev) {
    check(cvrl_augment_preview(prev_in.c_str(), prev_video,
                               prev_seed.set ? prev_seed.value : 0, prev_len, prev_stride,
                               prev_target, prev_target, prev_out.c_str()));
    std::printf("wrote frames to %s/original and %s/augmented\n", prev_out.c_str(),
                prev_out.c_str());
    return 0;
  }

  if (*shape) {
    std::vector<char> buf(4096);
    check(cvrl_shape_trace(shape_t, shape_s, buf.data(), static_cast<int32_t>(buf.size())));
    std::fputs(buf.data(), stdout);
    return 0;
  }

  return 0;
}
