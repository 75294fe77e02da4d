#include "cvrl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <numeric>

#include "cvrl/error.hpp"
#include "cvrl/parallel.hpp"

namespace cvrl {

namespace {

// stream tags
constexpr std::uint64_t kTagEpoch = 0x65706f63;   // epoch permutation
constexpr std::uint64_t kTagPair = 0x70616972;    // clip-pair sampling
constexpr std::uint64_t kTagAug = 0x61756700;     // augmentation draws
constexpr std::uint64_t kTagProbe = 0x70726f62;   // probe view sampling
constexpr std::uint64_t kTagShuffle = 0x73687566; // classifier batch shuffles
constexpr std::uint64_t kTagSubset = 0x73756273;  // semi-supervised subsets
constexpr std::uint64_t kTagFt = 0x66740000;      // fine-tune clip sampling
constexpr std::uint64_t kTagClsInit = 0x636c7369; // classifier init

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw io_error("cannot open '" + path + "' for writing");
  return f;
}

void csv_value(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

nlohmann::json encoder_config_json(const TinyEncoderConfig& c) {
  nlohmann::json stages = nlohmann::json::array();
  for (const ConvStageConfig& s : c.stages)
    stages.push_back({{"channels", s.out_channels},
                      {"kt", s.temporal_kernel},
                      {"ks", s.spatial_kernel},
                      {"st", s.temporal_stride},
                      {"ss", s.spatial_stride}});
  return {{"stages", stages},
          {"hidden_layers", c.hidden_layers},
          {"hidden_dim", c.hidden_dim},
          {"output_dim", c.output_dim},
          {"standardize", c.standardize}};
}

TinyEncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  TinyEncoderConfig c;
  c.stages.clear();
  for (const auto& s : j.at("stages"))
    c.stages.push_back({s.at("channels").get<int>(), s.at("kt").get<int>(), s.at("ks").get<int>(),
                        s.at("st").get<int>(), s.at("ss").get<int>()});
  c.hidden_layers = j.at("hidden_layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.output_dim = j.at("output_dim").get<int>();
  c.standardize = j.at("standardize").get<bool>();
  return c;
}

Checkpoint encoder_checkpoint(const TinyEncoder<float>& enc, const std::vector<float>& params,
                              nlohmann::json meta) {
  Checkpoint ck;
  meta["encoder_config"] = encoder_config_json(enc.config());
  ck.meta = std::move(meta);
  for (const TensorInfo& t : enc.param_layout()) {
    std::vector<float> values(params.begin() + t.offset, params.begin() + t.offset + t.size);
    ck.add_tensor(t.name, t.shape, std::move(values));
  }
  return ck;
}

std::vector<float> params_from_checkpoint(const Checkpoint& ck, const TinyEncoder<float>& enc) {
  std::vector<float> params(enc.param_count());
  for (const TensorInfo& t : enc.param_layout()) {
    if (!ck.has_tensor(t.name))
      throw format_error("checkpoint is missing tensor '" + t.name + "'");
    const std::vector<float>& v = ck.tensor(t.name);
    if (v.size() != t.size)
      throw format_error("checkpoint tensor '" + t.name + "' has " + std::to_string(v.size()) +
                         " values, encoder expects " + std::to_string(t.size));
    std::copy(v.begin(), v.end(), params.begin() + t.offset);
  }
  return params;
}

// Deterministic per-slot pipeline: pair sampling and augmentation streams are
// derived from (seed, step, slot), independent of worker scheduling.
void build_pretrain_batch(const Dataset& ds, const std::vector<int>& videos,
                          const PretrainConfig& cfg, const IntervalDistribution& dist, long step,
                          std::size_t input_count, std::vector<float>& out) {
  const int b = static_cast<int>(videos.size());
  const int span = clip_raw_span(cfg.clip_length, cfg.temporal_stride);
  out.resize(static_cast<std::size_t>(2 * b) * input_count);
  parallel_for(b, [&](int i) {
    const RawVideo& video = ds.videos[videos[i]];
    Rng pair_rng(derive_seed(cfg.seed, kTagPair, static_cast<std::uint64_t>(step), i));
    ClipPairSpec pair = sample_clip_pair(dist, video.t_total, span, pair_rng);
    for (int view = 0; view < 2; ++view) {
      int start = view == 0 ? pair.start1 : pair.start2;
      Clip clip = extract_clip(video, start, cfg.clip_length, cfg.temporal_stride);
      int slot = view * b + i;
      Rng aug_rng(derive_seed(cfg.seed, kTagAug, static_cast<std::uint64_t>(step), slot));
      Clip aug = augment_clip(clip, aug_rng, cfg.jitter, cfg.target_h, cfg.target_w,
                              cfg.consistency);
      std::copy(aug.values.begin(), aug.values.end(),
                out.begin() + static_cast<std::size_t>(slot) * input_count);
    }
  });
}

// ---- linear classifier (softmax regression) --------------------------------

struct ClassifierData {
  int dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // n x dim
  std::vector<int> labels;       // n
  std::size_t size() const { return labels.size(); }
  const double* feature(std::size_t i) const { return features.data() + i * dim; }
};

struct TrainedClassifier {
  std::vector<double> w;  // dim x num_classes
  std::vector<double> b;
};

// mean cross-entropy over the index list plus gradient accumulation
double classifier_batch_step(const ClassifierData& data, const std::vector<std::size_t>& idx,
                             const std::vector<double>& w, const std::vector<double>& b,
                             std::vector<double>& dw, std::vector<double>& db) {
  const int D = data.dim, C = data.num_classes;
  std::fill(dw.begin(), dw.end(), 0.0);
  std::fill(db.begin(), db.end(), 0.0);
  double loss = 0.0;
  std::vector<double> logits(C);
  const double inv_b = 1.0 / static_cast<double>(idx.size());
  for (std::size_t s : idx) {
    const double* f = data.feature(s);
    for (int c = 0; c < C; ++c) {
      double acc = b[c];
      for (int d = 0; d < D; ++d) acc += f[d] * w[static_cast<std::size_t>(d) * C + c];
      logits[c] = acc;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (int c = 0; c < C; ++c) denom += std::exp(logits[c] - mx);
    loss += -(logits[data.labels[s]] - mx - std::log(denom));
    for (int c = 0; c < C; ++c) {
      double p = std::exp(logits[c] - mx) / denom;
      double g = (p - (c == data.labels[s] ? 1.0 : 0.0)) * inv_b;
      db[c] += g;
      for (int d = 0; d < D; ++d) dw[static_cast<std::size_t>(d) * C + c] += f[d] * g;
    }
  }
  return loss * inv_b;
}

TrainedClassifier train_classifier(const ClassifierData& data, int epochs, double base_lr,
                                   int batch_size, std::uint64_t seed) {
  const int D = data.dim, C = data.num_classes;
  TrainedClassifier cls;
  cls.w.resize(static_cast<std::size_t>(D) * C);
  cls.b.assign(C, 0.0);
  Rng init_rng(derive_seed(seed, kTagClsInit));
  double bound = std::sqrt(1.0 / D);
  for (double& v : cls.w) v = init_rng.uniform(-bound, bound);

  std::vector<double> vel_w(cls.w.size(), 0.0), vel_b(C, 0.0);
  std::vector<double> dw(cls.w.size()), db(C);

  int steps_per_epoch = static_cast<int>((data.size() + batch_size - 1) / batch_size);
  ScheduleConfig sched;
  sched.base_lr = base_lr;
  sched.warmup_epochs = 0;
  sched.total_epochs = epochs;
  sched.steps_per_epoch = steps_per_epoch;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, kTagShuffle, epoch));
    shuffle(order, shuffle_rng);
    for (std::size_t at = 0; at < order.size(); at += batch_size, ++step) {
      std::size_t hi = std::min(order.size(), at + batch_size);
      std::vector<std::size_t> idx(order.begin() + at, order.begin() + hi);
      double lr = lr_at(sched, step);
      classifier_batch_step(data, idx, cls.w, cls.b, dw, db);
      sgd_step(std::span<double>(cls.w), std::span<const double>(dw), std::span<double>(vel_w),
               lr);
      sgd_step(std::span<double>(cls.b), std::span<const double>(db), std::span<double>(vel_b),
               lr);
    }
  }
  return cls;
}

// ---- shared encoder helpers -------------------------------------------------

JitterConfig crop_flip_only() {
  // evaluation-time training augmentation: cropping, resizing, flipping
  JitterConfig j;
  j.p_jitter = 0.0;
  j.p_grey = 0.0;
  j.min_blur_sigma = 0.0;
  j.max_blur_sigma = 0.0;
  return j;
}

std::vector<float> initial_eval_params(const EvalConfig& cfg, const TinyEncoder<float>& enc,
                                       TinyEncoderConfig* used_config) {
  if (!cfg.checkpoint_path.empty()) {
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path);
    if (ck.meta.contains("encoder_config"))
      *used_config = encoder_config_from_json(ck.meta["encoder_config"]);
    return params_from_checkpoint(ck, enc);
  }
  std::vector<float> params(enc.param_count());
  enc.init_params(cfg.seed, std::span<float>(params));
  return params;
}

TinyEncoderConfig eval_encoder_config(const EvalConfig& cfg) {
  if (!cfg.checkpoint_path.empty()) {
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path);
    if (ck.meta.contains("encoder_config"))
      return encoder_config_from_json(ck.meta["encoder_config"]);
  }
  return cfg.encoder;
}

void l2_normalize_inplace(double* v, int n) {
  double sq = 0.0;
  for (int i = 0; i < n; ++i) sq += v[i] * v[i];
  double norm = std::sqrt(sq);
  if (norm <= 1e-12) throw numeric_error("feature vector is numerically zero");
  for (int i = 0; i < n; ++i) v[i] /= norm;
}

// Features for probe training: per (video, view), a random clip with
// crop/resize/flip augmentation through the frozen encoder.
ClassifierData probe_features(const TinyEncoder<float>& enc, const std::vector<float>& params,
                              const Dataset& ds, const EvalConfig& cfg) {
  const int span = clip_raw_span(cfg.clip_length, cfg.temporal_stride);
  if (ds.t_total < span)
    throw config_error("probe: videos of " + std::to_string(ds.t_total) +
                       " frames cannot hold an eval clip of span " + std::to_string(span));
  const int views = std::max(1, cfg.train_views);
  const JitterConfig jitter = crop_flip_only();

  ClassifierData data;
  data.dim = enc.representation_dim();
  data.num_classes = static_cast<int>(ds.num_classes);
  data.features.resize(ds.videos.size() * views * data.dim);
  data.labels.resize(ds.videos.size() * views);

  // iterate in video-id order so dataset shuffling cannot change the result
  std::vector<int> by_id(ds.videos.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](int a, int b) { return ds.videos[a].video_id < ds.videos[b].video_id; });

  parallel_for(static_cast<int>(ds.videos.size()) * views, [&](int task) {
    int vi = task / views;
    int view = task % views;
    const RawVideo& video = ds.videos[by_id[vi]];
    Rng rng(derive_seed(cfg.seed, kTagProbe, video.video_id, view));
    int start = static_cast<int>(rng.uniform_int(0, video.t_total - span));
    Clip clip = extract_clip(video, start, cfg.clip_length, cfg.temporal_stride);
    Clip aug = augment_clip(clip, rng, jitter, cfg.target_h, cfg.target_w,
                            Consistency::consistent);

    thread_local std::unique_ptr<TinyEncoder<float>::Workspace> local;
    thread_local const TinyEncoder<float>* local_owner = nullptr;
    if (!local || local_owner != &enc) {
      local = std::make_unique<TinyEncoder<float>::Workspace>(enc.make_workspace());
      local_owner = &enc;
    }
    enc.forward(std::span<const float>(params), std::span<const float>(aug.values), *local);

    double* f = data.features.data() + static_cast<std::size_t>(task) * data.dim;
    for (int d = 0; d < data.dim; ++d) f[d] = local->representation.values[d];
    l2_normalize_inplace(f, data.dim);
    data.labels[task] = static_cast<int>(video.label);
  });
  return data;
}

// Crop rectangles for the dense multi-crop protocol, on a frame that may have
// been padded to wp x h (square sources are edge-padded to 4:3 first).
struct DenseCrop {
  int x = 0, y = 0, side = 0;
};

std::vector<DenseCrop> dense_crops(int h, int w, int num_crops) {
  std::vector<DenseCrop> crops;
  int side = std::min(h, w);
  if (num_crops == 1) {
    crops.push_back({(w - side) / 2, (h - side) / 2, side});
    return crops;
  }
  if (num_crops != 3) throw config_error("dense prediction supports 1 or 3 crops");
  if (w >= h) {
    crops.push_back({0, 0, side});
    crops.push_back({(w - side) / 2, 0, side});
    crops.push_back({w - side, 0, side});
  } else {
    crops.push_back({0, 0, side});
    crops.push_back({0, (h - side) / 2, side});
    crops.push_back({0, h - side, side});
  }
  return crops;
}

// edge-pad a frame symmetrically along x to the requested width
void pad_frame_width(const float* src, int h, int w, float* dst, int wp) {
  int left = (wp - w) / 2;
  for (int y = 0; y < h; ++y) {
    const float* srow = src + static_cast<std::size_t>(y) * w * 3;
    float* drow = dst + static_cast<std::size_t>(y) * wp * 3;
    for (int x = 0; x < wp; ++x) {
      int sx = std::clamp(x - left, 0, w - 1);
      for (int ch = 0; ch < 3; ++ch) drow[x * 3 + ch] = srow[sx * 3 + ch];
    }
  }
}

std::vector<double> model_logits(const Model& model, const TinyEncoder<float>& enc,
                                 TinyEncoder<float>::Workspace& ws) {
  const int D = enc.representation_dim(), C = model.num_classes;
  std::vector<double> rep(D);
  for (int d = 0; d < D; ++d) rep[d] = ws.representation.values[d];
  if (model.normalized_features) l2_normalize_inplace(rep.data(), D);
  std::vector<double> logits(C);
  for (int c = 0; c < C; ++c) {
    double acc = model.classifier_b[c];
    for (int d = 0; d < D; ++d) acc += rep[d] * model.classifier_w[static_cast<std::size_t>(d) * C + c];
    logits[c] = acc;
  }
  return logits;
}

}  // namespace

// ---- pretraining ------------------------------------------------------------

std::vector<std::vector<int>> epoch_batches(std::uint64_t seed, int epoch, int num_videos,
                                            int batch_size) {
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
  std::vector<int> perm(num_videos);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, kTagEpoch, static_cast<std::uint64_t>(epoch)));
  shuffle(perm, rng);
  std::vector<std::vector<int>> batches;
  for (int at = 0; at < num_videos; at += batch_size) {
    int hi = std::min(num_videos, at + batch_size);
    batches.emplace_back(perm.begin() + at, perm.begin() + hi);
  }
  return batches;
}

PretrainResult pretrain(const PretrainConfig& config, const std::string& out_dir) {
  Dataset ds = load_dataset(config.dataset_path);
  return pretrain(config, ds, out_dir);
}

PretrainResult pretrain(const PretrainConfig& config, const Dataset& dataset,
                        const std::string& out_dir) {
  if (config.batch_size < 2) throw config_error("pretrain: batch_size must be >= 2");
  if (!(config.tau > 0.0)) throw config_error("pretrain: tau must be positive");
  if (config.epochs < 1) throw config_error("pretrain: epochs must be >= 1");
  if (dataset.videos.empty()) throw config_error("pretrain: dataset is empty");
  const int span = clip_raw_span(config.clip_length, config.temporal_stride);
  if (dataset.t_total <= span)
    throw config_error("pretrain: videos of " + std::to_string(dataset.t_total) +
                       " frames are too short for clips of raw span " + std::to_string(span));

  std::filesystem::create_directories(out_dir);

  TinyEncoder<float> enc(config.encoder, config.clip_length, config.target_h, config.target_w);
  std::vector<float> params(enc.param_count());
  if (!config.init_checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(config.init_checkpoint);
    params = params_from_checkpoint(ck, enc);
  } else {
    enc.init_params(config.seed, std::span<float>(params));
  }
  std::vector<float> velocity(enc.param_count(), 0.0f);

  IntervalDistribution dist = from_preset(config.preset, dataset.t_total - span);

  const int num_videos = static_cast<int>(dataset.videos.size());
  const int steps_per_epoch = (num_videos + config.batch_size - 1) / config.batch_size;
  ScheduleConfig sched;
  sched.base_lr = config.base_lr;
  sched.warmup_epochs = config.warmup_epochs;
  sched.total_epochs = config.epochs;
  sched.steps_per_epoch = steps_per_epoch;
  if (sched.warmup_epochs >= sched.total_epochs) sched.warmup_epochs = 0;

  const std::size_t input_count = enc.input_count();
  const int max_slots = 2 * config.batch_size;
  std::vector<TinyEncoder<float>::Workspace> ws;
  ws.reserve(max_slots);
  for (int s = 0; s < max_slots; ++s) ws.push_back(enc.make_workspace());
  std::vector<std::vector<float>> slot_grad(max_slots,
                                            std::vector<float>(enc.param_count(), 0.0f));
  std::vector<float> batch_in;
  std::vector<float> batch_grad(enc.param_count());
  std::vector<float> proj_grad_f(static_cast<std::size_t>(max_slots) * enc.projection_dim());

  PretrainResult result;
  result.metrics.reserve(static_cast<std::size_t>(steps_per_epoch) * config.epochs);

  long step = 0;
  double t_start = now_seconds();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const std::vector<int>& batch : epoch_batches(config.seed, epoch, num_videos,
                                                       config.batch_size)) {
      const int b = static_cast<int>(batch.size());
      const int slots = 2 * b;
      build_pretrain_batch(dataset, batch, config, dist, step, input_count, batch_in);

      parallel_for(slots, [&](int s) {
        std::span<const float> row(batch_in.data() + static_cast<std::size_t>(s) * input_count,
                                   input_count);
        enc.forward(std::span<const float>(params), row, ws[s]);
      });

      EmbeddingBatch eb;
      eb.n = b;
      eb.dim = enc.projection_dim();
      eb.tau = config.tau;
      eb.rows.resize(static_cast<std::size_t>(slots) * eb.dim);
      for (int s = 0; s < slots; ++s)
        for (int d = 0; d < eb.dim; ++d)
          eb.rows[static_cast<std::size_t>(s) * eb.dim + d] = ws[s].projection.values[d];

      double loss = b >= 1 ? info_nce_loss(eb, config.loss_mode) : 0.0;
      if (!std::isfinite(loss))
        throw numeric_error("pretrain: non-finite loss " + std::to_string(loss) + " at step " +
                            std::to_string(step) + " (epoch " + std::to_string(epoch) + ")");
      SimilarityStats stats = similarity_stats(eb);
      std::vector<double> grads = info_nce_grad(eb, config.loss_mode);

      parallel_for(slots, [&](int s) {
        float* pg = proj_grad_f.data() + static_cast<std::size_t>(s) * eb.dim;
        for (int d = 0; d < eb.dim; ++d)
          pg[d] = static_cast<float>(grads[static_cast<std::size_t>(s) * eb.dim + d]);
        std::fill(slot_grad[s].begin(), slot_grad[s].end(), 0.0f);
        enc.backward(std::span<const float>(params), ws[s],
                     std::span<const float>(pg, eb.dim), {}, std::span<float>(slot_grad[s]));
      });

      std::fill(batch_grad.begin(), batch_grad.end(), 0.0f);
      for (int s = 0; s < slots; ++s) {
        const std::vector<float>& sg = slot_grad[s];
        for (std::size_t j = 0; j < batch_grad.size(); ++j) batch_grad[j] += sg[j];
      }

      double lr = lr_at(sched, step);
      sgd_step(std::span<float>(params), std::span<const float>(batch_grad),
               std::span<float>(velocity), lr, config.momentum, config.weight_decay);

      result.metrics.push_back({step, epoch, loss, stats.positive_mean, stats.negative_mean, lr});
      ++step;
    }

    if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 &&
        epoch + 1 < config.epochs) {
      Checkpoint ck = encoder_checkpoint(
          enc, params, {{"kind", "encoder"}, {"epoch", epoch + 1}, {"seed", config.seed}});
      save_checkpoint(ck, out_dir + "/checkpoint_epoch" + std::to_string(epoch + 1) + ".bin");
    }
    std::fprintf(stderr, "[pretrain] epoch %d/%d loss=%.4f lr=%.5f elapsed=%.1fs\n", epoch + 1,
                 config.epochs, result.metrics.back().loss, result.metrics.back().lr,
                 now_seconds() - t_start);
  }

  result.final_loss = result.metrics.empty() ? 0.0 : result.metrics.back().loss;
  result.checkpoint_path = out_dir + "/checkpoint.bin";
  Checkpoint ck = encoder_checkpoint(enc, params,
                                     {{"kind", "encoder"},
                                      {"epoch", config.epochs},
                                      {"seed", config.seed},
                                      {"preset", preset_name(config.preset)},
                                      {"tau", config.tau}});
  save_checkpoint(ck, result.checkpoint_path);
  result.metrics_path = out_dir + "/metrics.csv";
  write_metrics_csv(result.metrics_path, result.metrics);
  return result;
}

void write_metrics_csv(const std::string& path, const std::vector<StepMetrics>& metrics) {
  FilePtr f = open_for_write(path);
  std::string line = "step,epoch,loss,pos_sim,neg_sim,lr\n";
  for (const StepMetrics& m : metrics) {
    line += std::to_string(m.step) + "," + std::to_string(m.epoch) + ",";
    csv_value(line, m.loss);
    line += ",";
    csv_value(line, m.pos_sim);
    line += ",";
    csv_value(line, m.neg_sim);
    line += ",";
    csv_value(line, m.lr);
    line += "\n";
  }
  if (std::fwrite(line.data(), 1, line.size(), f.get()) != line.size())
    throw io_error("failed writing metrics CSV");
}

void dump_lr_schedule(const ScheduleConfig& schedule, const std::string& csv_path) {
  FilePtr f = open_for_write(csv_path);
  std::string line = "step,lr\n";
  for (long s = 0; s < schedule.total_steps(); ++s) {
    line += std::to_string(s) + ",";
    csv_value(line, lr_at(schedule, s));
    line += "\n";
  }
  if (std::fwrite(line.data(), 1, line.size(), f.get()) != line.size())
    throw io_error("failed writing schedule CSV");
}

// ---- models -----------------------------------------------------------------

void save_model(const Model& model, const std::string& path) {
  TinyEncoder<float> enc(model.encoder_config, model.clip_length, model.target_h, model.target_w);
  if (enc.param_count() != model.encoder_params.size())
    throw config_error("save_model: parameter buffer does not match the encoder config");
  Checkpoint ck = encoder_checkpoint(enc, model.encoder_params, {{"kind", "model"}});
  ck.meta["num_classes"] = model.num_classes;
  ck.meta["normalized_features"] = model.normalized_features;
  ck.meta["clip_length"] = model.clip_length;
  ck.meta["temporal_stride"] = model.temporal_stride;
  ck.meta["target_h"] = model.target_h;
  ck.meta["target_w"] = model.target_w;
  std::vector<float> wf(model.classifier_w.begin(), model.classifier_w.end());
  std::vector<float> bf(model.classifier_b.begin(), model.classifier_b.end());
  ck.add_tensor("classifier.weight", {enc.representation_dim(), model.num_classes}, wf);
  ck.add_tensor("classifier.bias", {model.num_classes}, bf);
  save_checkpoint(ck, path);
}

Model load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (!ck.meta.contains("encoder_config") || !ck.meta.contains("num_classes"))
    throw format_error("'" + path + "' is not a model checkpoint");
  Model m;
  m.encoder_config = encoder_config_from_json(ck.meta["encoder_config"]);
  m.num_classes = ck.meta["num_classes"].get<int>();
  m.normalized_features = ck.meta.value("normalized_features", true);
  m.clip_length = ck.meta.value("clip_length", 32);
  m.temporal_stride = ck.meta.value("temporal_stride", 2);
  m.target_h = ck.meta.value("target_h", 32);
  m.target_w = ck.meta.value("target_w", 32);
  TinyEncoder<float> enc(m.encoder_config, m.clip_length, m.target_h, m.target_w);
  m.encoder_params = params_from_checkpoint(ck, enc);
  const std::vector<float>& wf = ck.tensor("classifier.weight");
  const std::vector<float>& bf = ck.tensor("classifier.bias");
  m.classifier_w.assign(wf.begin(), wf.end());
  m.classifier_b.assign(bf.begin(), bf.end());
  return m;
}

// ---- dense prediction -------------------------------------------------------

std::vector<double> dense_predict(const Model& model, const RawVideo& video, int num_clips,
                                  int num_crops, long* passes) {
  const int span = clip_raw_span(model.clip_length, model.temporal_stride);
  if (video.t_total < span)
    throw bounds_error("dense_predict: video shorter than one evaluation clip");
  if (num_clips < 1) throw config_error("dense_predict: num_clips must be >= 1");

  TinyEncoder<float> enc(model.encoder_config, model.clip_length, model.target_h, model.target_w);
  auto ws = enc.make_workspace();

  const int valid = video.t_total - span;
  std::vector<int> starts;
  if (num_clips == 1) {
    starts.push_back(valid / 2);
  } else {
    for (int i = 0; i < num_clips; ++i)
      starts.push_back(static_cast<int>(std::lround(static_cast<double>(i) * valid /
                                                    (num_clips - 1))));
  }

  // square frames are edge-padded to 4:3 before the 3-crop split
  int ph = video.height, pw = video.width;
  bool pad = num_crops == 3 && video.height == video.width;
  if (pad) pw = static_cast<int>(std::lround(video.width * 4.0 / 3.0));
  std::vector<DenseCrop> crops = dense_crops(ph, pw, num_crops);

  std::vector<double> logits(model.num_classes, 0.0);
  long count = 0;
  std::vector<float> clip_buf;
  for (int start : starts) {
    Clip clip = extract_clip(video, start, model.clip_length, model.temporal_stride);
    const Clip* source = &clip;
    Clip padded;
    if (pad) {
      padded.length = clip.length;
      padded.height = ph;
      padded.width = pw;
      padded.values.resize(static_cast<std::size_t>(clip.length) * ph * pw * 3);
      for (int k = 0; k < clip.length; ++k)
        pad_frame_width(clip.frame(k), clip.height, clip.width, padded.frame(k), pw);
      source = &padded;
    }
    for (const DenseCrop& crop : crops) {
      clip_buf.assign(static_cast<std::size_t>(source->length) * model.target_h * model.target_w * 3,
                      0.0f);
      CropRect rect{crop.x, crop.y, crop.side, crop.side};
      for (int k = 0; k < source->length; ++k)
        crop_resize(source->frame(k), source->height, source->width, rect,
                    clip_buf.data() +
                        static_cast<std::size_t>(k) * model.target_h * model.target_w * 3,
                    model.target_h, model.target_w);
      enc.forward(std::span<const float>(model.encoder_params),
                  std::span<const float>(clip_buf), ws);
      std::vector<double> l = model_logits(model, enc, ws);
      for (int c = 0; c < model.num_classes; ++c) logits[c] += l[c];
      ++count;
    }
  }
  for (double& v : logits) v /= static_cast<double>(count);
  if (passes) *passes += count;
  return logits;
}

double evaluate_top1(const Model& model, const Dataset& eval_set, int num_clips, int num_crops,
                     long* passes) {
  if (eval_set.videos.empty()) throw config_error("evaluate_top1: empty evaluation set");
  std::vector<int> correct(eval_set.videos.size(), 0);
  std::vector<long> counts(eval_set.videos.size(), 0);
  parallel_for(static_cast<int>(eval_set.videos.size()), [&](int i) {
    const RawVideo& video = eval_set.videos[i];
    long local = 0;
    std::vector<double> logits = dense_predict(model, video, num_clips, num_crops, &local);
    int argmax = 0;
    for (int c = 1; c < model.num_classes; ++c)
      if (logits[c] > logits[argmax]) argmax = c;
    correct[i] = argmax == static_cast<int>(video.label) ? 1 : 0;
    counts[i] = local;
  });
  long total_correct = 0, total_passes = 0;
  for (std::size_t i = 0; i < correct.size(); ++i) {
    total_correct += correct[i];
    total_passes += counts[i];
  }
  if (passes) *passes += total_passes;
  return static_cast<double>(total_correct) / static_cast<double>(eval_set.videos.size());
}

// ---- linear evaluation ------------------------------------------------------

EvalResult linear_eval(const EvalConfig& config, const Dataset& train, const Dataset& eval_set) {
  if (train.num_classes != eval_set.num_classes)
    throw config_error("linear_eval: train and eval class counts disagree");

  TinyEncoderConfig enc_config = eval_encoder_config(config);
  TinyEncoder<float> enc(enc_config, config.clip_length, config.target_h, config.target_w);
  TinyEncoderConfig used = enc_config;
  std::vector<float> params = initial_eval_params(config, enc, &used);

  ClassifierData data = probe_features(enc, params, train, config);
  TrainedClassifier cls = train_classifier(data, config.classifier_epochs, config.classifier_lr,
                                           config.classifier_batch, config.seed);

  EvalResult result;
  result.model.encoder_config = enc_config;
  result.model.clip_length = config.clip_length;
  result.model.temporal_stride = config.temporal_stride;
  result.model.target_h = config.target_h;
  result.model.target_w = config.target_w;
  result.model.num_classes = static_cast<int>(train.num_classes);
  result.model.normalized_features = true;
  result.model.encoder_params = std::move(params);
  result.model.classifier_w = std::move(cls.w);
  result.model.classifier_b = std::move(cls.b);

  result.top1 = evaluate_top1(result.model, eval_set, config.num_dense_clips,
                              config.num_spatial_crops, &result.forward_passes);
  return result;
}

// ---- semi-supervised --------------------------------------------------------

Dataset semi_subset(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw config_error("semi_subset: fraction must lie in (0, 1]");

  std::vector<std::vector<int>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.videos.size(); ++i)
    by_class[dataset.videos[i].label].push_back(static_cast<int>(i));

  std::vector<int> chosen;
  for (std::uint32_t c = 0; c < dataset.num_classes; ++c) {
    std::vector<int>& pool = by_class[c];
    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
      return dataset.videos[a].video_id < dataset.videos[b].video_id;
    });
    int k = static_cast<int>(std::lround(fraction * static_cast<double>(pool.size())));
    if (k < 1)
      throw config_error("semi_subset: fraction " + std::to_string(fraction) +
                         " leaves class " + std::to_string(c) + " empty");
    Rng rng(derive_seed(seed, kTagSubset, c));
    // partial Fisher-Yates: the first k entries are a uniform sample
    for (int i = 0; i < k; ++i) {
      int j = static_cast<int>(rng.uniform_int(i, static_cast<int>(pool.size()) - 1));
      std::swap(pool[i], pool[j]);
    }
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + k);
  }
  std::sort(chosen.begin(), chosen.end(), [&](int a, int b) {
    return dataset.videos[a].video_id < dataset.videos[b].video_id;
  });

  Dataset subset;
  subset.num_classes = dataset.num_classes;
  subset.generation_seed = dataset.generation_seed;
  subset.t_total = dataset.t_total;
  subset.height = dataset.height;
  subset.width = dataset.width;
  subset.videos.reserve(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    RawVideo v = dataset.videos[chosen[i]];
    v.video_id = static_cast<std::uint32_t>(i);  // renumber densely
    subset.videos.push_back(std::move(v));
  }
  return subset;
}

EvalResult fine_tune(const EvalConfig& config, const Dataset& train, const Dataset& eval_set,
                     bool from_checkpoint) {
  if (train.num_classes != eval_set.num_classes)
    throw config_error("fine_tune: train and eval class counts disagree");
  if (train.videos.empty()) throw config_error("fine_tune: empty training subset");
  const int span = clip_raw_span(config.clip_length, config.temporal_stride);
  if (train.t_total < span)
    throw config_error("fine_tune: videos too short for the evaluation clip span");

  TinyEncoderConfig enc_config =
      from_checkpoint ? eval_encoder_config(config) : config.encoder;
  TinyEncoder<float> enc(enc_config, config.clip_length, config.target_h, config.target_w);

  std::vector<float> params;
  if (from_checkpoint) {
    if (config.checkpoint_path.empty())
      throw config_error("fine_tune: from_checkpoint requires a checkpoint path");
    Checkpoint ck = load_checkpoint(config.checkpoint_path);
    params = params_from_checkpoint(ck, enc);
  } else {
    params.resize(enc.param_count());
    enc.init_params(config.seed, std::span<float>(params));
  }

  const int D = enc.representation_dim();
  const int C = static_cast<int>(train.num_classes);
  std::vector<float> cls_w(static_cast<std::size_t>(D) * C);
  std::vector<float> cls_b(C, 0.0f);
  {
    Rng rng(derive_seed(config.seed, kTagClsInit, 1));
    double bound = std::sqrt(1.0 / D);
    for (float& v : cls_w) v = static_cast<float>(rng.uniform(-bound, bound));
  }

  std::vector<float> vel_enc(enc.param_count(), 0.0f);
  std::vector<float> vel_w(cls_w.size(), 0.0f), vel_b(C, 0.0f);

  const int num_videos = static_cast<int>(train.videos.size());
  const int batch = std::max(1, std::min(config.fine_tune_batch, num_videos));
  const int steps_per_epoch = (num_videos + batch - 1) / batch;
  ScheduleConfig sched;
  sched.base_lr = config.fine_tune_lr;
  sched.warmup_epochs = 0;
  sched.total_epochs = config.fine_tune_epochs;
  sched.steps_per_epoch = steps_per_epoch;

  const JitterConfig jitter = crop_flip_only();
  std::vector<TinyEncoder<float>::Workspace> ws;
  for (int i = 0; i < batch; ++i) ws.push_back(enc.make_workspace());
  std::vector<std::vector<float>> slot_grad(batch, std::vector<float>(enc.param_count(), 0.0f));
  std::vector<std::vector<float>> slot_rep_grad(batch, std::vector<float>(D, 0.0f));
  std::vector<float> batch_grad(enc.param_count());
  std::vector<float> dw(cls_w.size()), db(C);
  std::vector<int> slot_label(batch);

  long step = 0;
  for (int epoch = 0; epoch < config.fine_tune_epochs; ++epoch) {
    for (const std::vector<int>& vids :
         epoch_batches(derive_seed(config.seed, kTagFt), epoch, num_videos, batch)) {
      const int b = static_cast<int>(vids.size());
      // forward every sample, classifier on the raw representation
      parallel_for(b, [&](int i) {
        const RawVideo& video = train.videos[vids[i]];
        Rng rng(derive_seed(config.seed, kTagFt, static_cast<std::uint64_t>(step), i));
        int start = static_cast<int>(rng.uniform_int(0, video.t_total - span));
        Clip clip = extract_clip(video, start, config.clip_length, config.temporal_stride);
        Clip aug = augment_clip(clip, rng, jitter, config.target_h, config.target_w,
                                Consistency::consistent);
        enc.forward(std::span<const float>(params), std::span<const float>(aug.values), ws[i]);
        slot_label[i] = static_cast<int>(video.label);
      });

      // softmax CE on logits; gradients for classifier and representations
      std::fill(dw.begin(), dw.end(), 0.0f);
      std::fill(db.begin(), db.end(), 0.0f);
      const float inv_b = 1.0f / static_cast<float>(b);
      for (int i = 0; i < b; ++i) {
        const float* f = ws[i].representation.values.data();
        std::vector<double> logits(C);
        for (int c = 0; c < C; ++c) {
          double acc = cls_b[c];
          for (int d = 0; d < D; ++d) acc += f[d] * cls_w[static_cast<std::size_t>(d) * C + c];
          logits[c] = acc;
        }
        double mx = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (int c = 0; c < C; ++c) denom += std::exp(logits[c] - mx);
        std::fill(slot_rep_grad[i].begin(), slot_rep_grad[i].end(), 0.0f);
        for (int c = 0; c < C; ++c) {
          float p = static_cast<float>(std::exp(logits[c] - mx) / denom);
          float g = (p - (c == slot_label[i] ? 1.0f : 0.0f)) * inv_b;
          db[c] += g;
          for (int d = 0; d < D; ++d) {
            dw[static_cast<std::size_t>(d) * C + c] += f[d] * g;
            slot_rep_grad[i][d] += cls_w[static_cast<std::size_t>(d) * C + c] * g;
          }
        }
      }

      parallel_for(b, [&](int i) {
        std::fill(slot_grad[i].begin(), slot_grad[i].end(), 0.0f);
        enc.backward(std::span<const float>(params), ws[i], {},
                     std::span<const float>(slot_rep_grad[i]), std::span<float>(slot_grad[i]));
      });
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0f);
      for (int i = 0; i < b; ++i)
        for (std::size_t j = 0; j < batch_grad.size(); ++j) batch_grad[j] += slot_grad[i][j];

      double lr = lr_at(sched, step);
      sgd_step(std::span<float>(params), std::span<const float>(batch_grad),
               std::span<float>(vel_enc), lr);
      sgd_step(std::span<float>(cls_w), std::span<const float>(dw), std::span<float>(vel_w), lr);
      sgd_step(std::span<float>(cls_b), std::span<const float>(db), std::span<float>(vel_b), lr);
      ++step;
    }
  }

  EvalResult result;
  result.model.encoder_config = enc_config;
  result.model.clip_length = config.clip_length;
  result.model.temporal_stride = config.temporal_stride;
  result.model.target_h = config.target_h;
  result.model.target_w = config.target_w;
  result.model.num_classes = C;
  result.model.normalized_features = false;
  result.model.encoder_params = std::move(params);
  result.model.classifier_w.assign(cls_w.begin(), cls_w.end());
  result.model.classifier_b.assign(cls_b.begin(), cls_b.end());
  result.top1 = evaluate_top1(result.model, eval_set, config.num_dense_clips,
                              config.num_spatial_crops, &result.forward_passes);
  return result;
}

// ---- misc outputs -----------------------------------------------------------

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
  FilePtr f = open_for_write(path);
  std::string line = "seed,consistent_acc,per_frame_acc\n";
  double mc = 0.0, mp = 0.0;
  for (const AblationRow& r : rows) {
    line += std::to_string(r.seed) + ",";
    csv_value(line, r.consistent_acc);
    line += ",";
    csv_value(line, r.per_frame_acc);
    line += "\n";
    mc += r.consistent_acc;
    mp += r.per_frame_acc;
  }
  if (!rows.empty()) {
    line += "mean,";
    csv_value(line, mc / rows.size());
    line += ",";
    csv_value(line, mp / rows.size());
    line += "\n";
  }
  if (std::fwrite(line.data(), 1, line.size(), f.get()) != line.size())
    throw io_error("failed writing ablation CSV");
}

namespace {

void write_ppm(const std::string& path, const float* frame, int h, int w) {
  FilePtr f = open_for_write(path);
  std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::fwrite(header.data(), 1, header.size(), f.get());
  std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    float v = frame[i];
    v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  if (std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
    throw io_error("failed writing " + path);
}

}  // namespace

void augment_preview(const Dataset& dataset, int video_id, std::uint64_t seed, int clip_length,
                     int stride, int target_h, int target_w, const std::string& out_dir) {
  if (video_id < 0 || video_id >= static_cast<int>(dataset.videos.size()))
    throw bounds_error("augment_preview: video " + std::to_string(video_id) + " not in dataset");
  const RawVideo& video = dataset.videos[video_id];
  const int span = clip_raw_span(clip_length, stride);
  if (video.t_total < span) throw bounds_error("augment_preview: video too short for the clip");

  std::filesystem::create_directories(out_dir + "/original");
  std::filesystem::create_directories(out_dir + "/augmented");

  Rng rng(derive_seed(seed, kTagAug, video_id));
  int start = static_cast<int>(rng.uniform_int(0, video.t_total - span));
  Clip clip = extract_clip(video, start, clip_length, stride);
  JitterConfig jitter;
  AugmentParams params = draw_params(rng, clip.height, clip.width, jitter, target_h, target_w);
  Clip aug = apply(clip, params);

  char name[64];
  for (int k = 0; k < clip.length; ++k) {
    std::snprintf(name, sizeof(name), "/original/frame_%03d.ppm", k);
    write_ppm(out_dir + name, clip.frame(k), clip.height, clip.width);
    std::snprintf(name, sizeof(name), "/augmented/frame_%03d.ppm", k);
    write_ppm(out_dir + name, aug.frame(k), aug.height, aug.width);
  }
}

void sample_histogram_csv(DistributionPreset preset, int t_max, long n, std::uint64_t seed,
                          const std::string& out_csv) {
  if (n < 1) throw config_error("sample_histogram_csv: n must be >= 1");
  IntervalDistribution dist = from_preset(preset, t_max);
  std::vector<long> counts(t_max + 1, 0);
  Rng rng(seed);
  for (long i = 0; i < n; ++i) counts[sample_interval(dist, rng)]++;

  FilePtr f = open_for_write(out_csv);
  std::string line = "t,count,analytic_pdf\n";
  for (int t = 0; t <= t_max; ++t) {
    line += std::to_string(t) + "," + std::to_string(counts[t]) + ",";
    csv_value(line, dist.pdf(t));
    line += "\n";
  }
  if (std::fwrite(line.data(), 1, line.size(), f.get()) != line.size())
    throw io_error("failed writing histogram CSV");
}

}  // namespace cvrl
