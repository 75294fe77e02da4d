#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvrl/augment.hpp"
#include "cvrl/checkpoint.hpp"
#include "cvrl/loss.hpp"
#include "cvrl/nn.hpp"
#include "cvrl/schedule.hpp"
#include "cvrl/temporal.hpp"
#include "cvrl/video.hpp"

namespace cvrl {

struct PretrainConfig {
  std::string dataset_path;
  DistributionPreset preset = DistributionPreset::dec_linear;
  int clip_length = 16;
  int temporal_stride = 2;
  int batch_size = 32;  // N source videos per step; the batch holds 2N clips
  int epochs = 50;
  double tau = 0.1;
  double base_lr = 0.05;
  int warmup_epochs = 5;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int target_h = 32;
  int target_w = 32;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::symmetric;
  Consistency consistency = Consistency::consistent;
  int checkpoint_every = 0;  // epochs between checkpoints; 0 keeps only the final one
  std::string init_checkpoint;
  TinyEncoderConfig encoder = TinyEncoderConfig::defaults();
  JitterConfig jitter;
};

struct StepMetrics {
  long step = 0;
  int epoch = 0;
  double loss = 0.0;
  double pos_sim = 0.0;
  double neg_sim = 0.0;
  double lr = 0.0;
};

struct PretrainResult {
  std::string checkpoint_path;
  std::string metrics_path;
  std::vector<StepMetrics> metrics;
  double final_loss = 0.0;
};

// Every video appears in exactly one batch per epoch; the last batch may be
// short when batch_size does not divide the corpus.
std::vector<std::vector<int>> epoch_batches(std::uint64_t seed, int epoch, int num_videos,
                                            int batch_size);

PretrainResult pretrain(const PretrainConfig& config, const Dataset& dataset,
                        const std::string& out_dir);
PretrainResult pretrain(const PretrainConfig& config, const std::string& out_dir);

void dump_lr_schedule(const ScheduleConfig& schedule, const std::string& csv_path);

// ---- evaluation -------------------------------------------------------------

struct EvalConfig {
  std::string checkpoint_path;  // empty: random init from `seed` (baseline probe)
  TinyEncoderConfig encoder = TinyEncoderConfig::defaults();  // used when no checkpoint
  int clip_length = 32;
  int temporal_stride = 2;
  int num_dense_clips = 10;
  int num_spatial_crops = 3;
  int classifier_epochs = 100;
  double classifier_lr = 1.0;
  int classifier_batch = 64;
  int train_views = 2;  // augmented clips cached per training video
  double label_fraction = 1.0;
  int target_h = 32;
  int target_w = 32;
  std::uint64_t seed = 0;
  int fine_tune_epochs = 60;
  double fine_tune_lr = 0.02;
  int fine_tune_batch = 16;
};

// Frozen trained assembly: encoder parameters plus a linear classifier on the
// backbone representation.
struct Model {
  TinyEncoderConfig encoder_config;
  int clip_length = 32;
  int temporal_stride = 2;
  int target_h = 32;
  int target_w = 32;
  int num_classes = 0;
  bool normalized_features = true;  // probe models normalize, fine-tuned ones do not
  std::vector<float> encoder_params;
  std::vector<double> classifier_w;  // rep_dim x num_classes
  std::vector<double> classifier_b;  // num_classes
};

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

struct EvalResult {
  double top1 = 0.0;
  long forward_passes = 0;
  Model model;
};

// Linear probe: backbone frozen, features are the l2-normalized pooled
// representations (projection head discarded), multinomial logistic classifier
// trained with the shared SGD/schedule machinery, accuracy from dense
// multi-clip / multi-crop prediction on the evaluation set.
EvalResult linear_eval(const EvalConfig& config, const Dataset& train, const Dataset& eval_set);

// Semi-supervised protocol: all layers trainable plus a fresh classifier.
// from_checkpoint=false trains from random init (the scratch baseline).
EvalResult fine_tune(const EvalConfig& config, const Dataset& train, const Dataset& eval_set,
                     bool from_checkpoint);

// Balanced per-class sample without replacement of round(fraction * count)
// videos; ids are renumbered densely.
Dataset semi_subset(const Dataset& dataset, double fraction, std::uint64_t seed);

// Averaged class logits over num_clips uniformly spaced clips x num_crops
// spatial crops (start/center/end along the longer axis; square frames are
// edge-padded to 4:3 first).
std::vector<double> dense_predict(const Model& model, const RawVideo& video, int num_clips,
                                  int num_crops, long* passes = nullptr);

double evaluate_top1(const Model& model, const Dataset& eval_set, int num_clips, int num_crops,
                     long* passes = nullptr);

struct AblationRow {
  std::uint64_t seed = 0;
  double consistent_acc = 0.0;
  double per_frame_acc = 0.0;
};
void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

void write_metrics_csv(const std::string& path, const std::vector<StepMetrics>& metrics);

// PPM (P6) dump of original and augmented frames for one video.
void augment_preview(const Dataset& dataset, int video_id, std::uint64_t seed, int clip_length,
                     int stride, int target_h, int target_w, const std::string& out_dir);

// (t, count, analytic_pdf) rows for n draws from a preset.
void sample_histogram_csv(DistributionPreset preset, int t_max, long n, std::uint64_t seed,
                          const std::string& out_csv);

}  // namespace cvrl
