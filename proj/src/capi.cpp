#include "cvrl.h"

#include <cstring>
#include <string>

#include "cvrl/config.hpp"
#include "cvrl/error.hpp"
#include "cvrl/harness.hpp"

namespace {

thread_local std::string g_last_error;

cvrl_status to_status(cvrl::ErrorCode code) {
  switch (code) {
    case cvrl::ErrorCode::config: return CVRL_ERR_CONFIG;
    case cvrl::ErrorCode::bounds: return CVRL_ERR_BOUNDS;
    case cvrl::ErrorCode::io: return CVRL_ERR_IO;
    case cvrl::ErrorCode::format: return CVRL_ERR_FORMAT;
    case cvrl::ErrorCode::numeric: return CVRL_ERR_NUMERIC;
    case cvrl::ErrorCode::state: return CVRL_ERR_STATE;
  }
  return CVRL_ERR_INTERNAL;
}

template <typename Fn>
cvrl_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CVRL_OK;
  } catch (const cvrl::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CVRL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CVRL_ERR_INTERNAL;
  }
}

cvrl_status require_arg(bool ok, const char* what) {
  if (ok) return CVRL_OK;
  g_last_error = std::string("invalid argument: ") + what;
  return CVRL_ERR_ARGUMENT;
}

}  // namespace

struct cvrl_dataset {
  cvrl::Dataset data;
};

struct cvrl_interval_dist {
  cvrl::IntervalDistribution dist;
};

extern "C" {

const char* cvrl_status_name(cvrl_status status) {
  switch (status) {
    case CVRL_OK: return "ok";
    case CVRL_ERR_CONFIG: return "configuration error";
    case CVRL_ERR_BOUNDS: return "bounds error";
    case CVRL_ERR_IO: return "io error";
    case CVRL_ERR_FORMAT: return "format error";
    case CVRL_ERR_NUMERIC: return "numeric error";
    case CVRL_ERR_STATE: return "state error";
    case CVRL_ERR_ARGUMENT: return "invalid argument";
    case CVRL_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* cvrl_last_error(void) { return g_last_error.c_str(); }

cvrl_status cvrl_dataset_generate(int32_t num_classes, int32_t videos_per_class, int32_t t_total,
                                  int32_t height, int32_t width, uint64_t seed,
                                  cvrl_dataset** out) {
  if (cvrl_status s = require_arg(out != nullptr, "out"); s != CVRL_OK) return s;
  return guarded([&] {
    auto* handle = new cvrl_dataset{cvrl::generate_synthetic_dataset(
        num_classes, videos_per_class, t_total, height, width, seed)};
    *out = handle;
  });
}

cvrl_status cvrl_dataset_load(const char* path, cvrl_dataset** out) {
  if (cvrl_status s = require_arg(path && out, "path/out"); s != CVRL_OK) return s;
  return guarded([&] { *out = new cvrl_dataset{cvrl::load_dataset(path)}; });
}

cvrl_status cvrl_dataset_save(const cvrl_dataset* dataset, const char* path) {
  if (cvrl_status s = require_arg(dataset && path, "dataset/path"); s != CVRL_OK) return s;
  return guarded([&] { cvrl::save_dataset(dataset->data, path); });
}

cvrl_status cvrl_dataset_info(const cvrl_dataset* dataset, int32_t* num_videos,
                              int32_t* num_classes, int32_t* t_total, int32_t* height,
                              int32_t* width) {
  if (cvrl_status s = require_arg(dataset != nullptr, "dataset"); s != CVRL_OK) return s;
  if (num_videos) *num_videos = static_cast<int32_t>(dataset->data.videos.size());
  if (num_classes) *num_classes = static_cast<int32_t>(dataset->data.num_classes);
  if (t_total) *t_total = dataset->data.t_total;
  if (height) *height = dataset->data.height;
  if (width) *width = dataset->data.width;
  return CVRL_OK;
}

cvrl_status cvrl_dataset_subset(const cvrl_dataset* dataset, double fraction, uint64_t seed,
                                cvrl_dataset** out) {
  if (cvrl_status s = require_arg(dataset && out, "dataset/out"); s != CVRL_OK) return s;
  return guarded([&] { *out = new cvrl_dataset{cvrl::semi_subset(dataset->data, fraction, seed)}; });
}

void cvrl_dataset_free(cvrl_dataset* dataset) { delete dataset; }

cvrl_status cvrl_interval_dist_create(const char* preset, int32_t t_max,
                                      cvrl_interval_dist** out) {
  if (cvrl_status s = require_arg(preset && out, "preset/out"); s != CVRL_OK) return s;
  return guarded([&] {
    *out = new cvrl_interval_dist{cvrl::from_preset(cvrl::preset_from_name(preset), t_max)};
  });
}

cvrl_status cvrl_interval_dist_cdf(const cvrl_interval_dist* dist, double t, double* out) {
  if (cvrl_status s = require_arg(dist && out, "dist/out"); s != CVRL_OK) return s;
  return guarded([&] { *out = dist->dist.cdf(t); });
}

cvrl_status cvrl_interval_dist_sample(const cvrl_interval_dist* dist, uint64_t seed,
                                      int32_t count, int32_t* out) {
  if (cvrl_status s = require_arg(dist && out && count >= 0, "dist/out/count"); s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::Rng rng(seed);
    for (int32_t i = 0; i < count; ++i)
      out[i] = static_cast<int32_t>(cvrl::sample_interval(dist->dist, rng));
  });
}

void cvrl_interval_dist_free(cvrl_interval_dist* dist) { delete dist; }

cvrl_status cvrl_sample_hist(const char* preset, int32_t t_max, int64_t n, uint64_t seed,
                             const char* out_csv) {
  if (cvrl_status s = require_arg(preset && out_csv, "preset/out_csv"); s != CVRL_OK) return s;
  return guarded([&] {
    cvrl::sample_histogram_csv(cvrl::preset_from_name(preset), t_max, n, seed, out_csv);
  });
}

cvrl_status cvrl_info_nce(const double* rows, int32_t n_pairs, int32_t dim, double tau,
                          int32_t mode, double* loss_out, double* grad_out) {
  if (cvrl_status s = require_arg(rows && loss_out && n_pairs > 0 && dim > 0, "rows/loss_out");
      s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::EmbeddingBatch batch;
    batch.n = n_pairs;
    batch.dim = dim;
    batch.tau = tau;
    batch.rows.assign(rows, rows + static_cast<std::size_t>(2 * n_pairs) * dim);
    cvrl::LossMode m = mode == 0 ? cvrl::LossMode::one_sided : cvrl::LossMode::symmetric;
    *loss_out = cvrl::info_nce_loss(batch, m);
    if (grad_out) {
      std::vector<double> g = cvrl::info_nce_grad(batch, m);
      std::memcpy(grad_out, g.data(), g.size() * sizeof(double));
    }
  });
}

cvrl_status cvrl_pretrain(const char* config_json, const char* out_dir) {
  if (cvrl_status s = require_arg(config_json && out_dir, "config_json/out_dir"); s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::PretrainConfig cfg =
        cvrl::pretrain_config_from_json(cvrl::parse_config_text(config_json));
    cvrl::pretrain(cfg, out_dir);
  });
}

cvrl_status cvrl_lr_schedule_dump(const char* config_json, const char* out_csv) {
  if (cvrl_status s = require_arg(config_json && out_csv, "config_json/out_csv"); s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::PretrainConfig cfg =
        cvrl::pretrain_config_from_json(cvrl::parse_config_text(config_json));
    cvrl::DatasetInfo info = cvrl::read_dataset_header(cfg.dataset_path);
    cvrl::ScheduleConfig sched;
    sched.base_lr = cfg.base_lr;
    sched.warmup_epochs = cfg.warmup_epochs;
    sched.total_epochs = cfg.epochs;
    sched.steps_per_epoch =
        (static_cast<int>(info.num_videos) + cfg.batch_size - 1) / cfg.batch_size;
    if (sched.warmup_epochs >= sched.total_epochs) sched.warmup_epochs = 0;
    cvrl::dump_lr_schedule(sched, out_csv);
  });
}

cvrl_status cvrl_linear_eval(const char* config_json, const char* train_path,
                             const char* eval_path, const char* model_out, double* top1) {
  if (cvrl_status s = require_arg(config_json && train_path && eval_path && top1,
                                  "config_json/train_path/eval_path/top1");
      s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::EvalConfig cfg = cvrl::eval_config_from_json(cvrl::parse_config_text(config_json));
    cvrl::Dataset train = cvrl::load_dataset(train_path);
    cvrl::Dataset eval_set = cvrl::load_dataset(eval_path);
    cvrl::EvalResult result = cvrl::linear_eval(cfg, train, eval_set);
    if (model_out && model_out[0] != '\0') cvrl::save_model(result.model, model_out);
    *top1 = result.top1;
  });
}

cvrl_status cvrl_fine_tune(const char* config_json, const char* train_path,
                           const char* eval_path, double fraction, int32_t from_scratch,
                           const char* model_out, double* top1) {
  if (cvrl_status s = require_arg(config_json && train_path && eval_path && top1,
                                  "config_json/train_path/eval_path/top1");
      s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::EvalConfig cfg = cvrl::eval_config_from_json(cvrl::parse_config_text(config_json));
    cvrl::Dataset train = cvrl::load_dataset(train_path);
    cvrl::Dataset eval_set = cvrl::load_dataset(eval_path);
    if (fraction < 1.0) train = cvrl::semi_subset(train, fraction, cfg.seed);
    cvrl::EvalResult result = cvrl::fine_tune(cfg, train, eval_set, from_scratch == 0);
    if (model_out && model_out[0] != '\0') cvrl::save_model(result.model, model_out);
    *top1 = result.top1;
  });
}

cvrl_status cvrl_dense_predict(const char* model_path, const char* dataset_path,
                               int32_t video_id, int32_t num_clips, int32_t num_crops,
                               double* logits_out, int32_t logits_capacity,
                               int32_t* num_classes_out, int32_t* predicted_class) {
  if (cvrl_status s = require_arg(model_path && dataset_path, "model_path/dataset_path");
      s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::Model model = cvrl::load_model(model_path);
    cvrl::Dataset ds = cvrl::load_dataset(dataset_path);
    if (video_id < 0 || video_id >= static_cast<int32_t>(ds.videos.size()))
      throw cvrl::bounds_error("video " + std::to_string(video_id) + " not in dataset");
    std::vector<double> logits =
        cvrl::dense_predict(model, ds.videos[video_id], num_clips, num_crops);
    if (num_classes_out) *num_classes_out = model.num_classes;
    if (logits_out) {
      if (logits_capacity < model.num_classes)
        throw cvrl::bounds_error("logits buffer too small");
      std::memcpy(logits_out, logits.data(), logits.size() * sizeof(double));
    }
    if (predicted_class) {
      int arg = 0;
      for (int c = 1; c < model.num_classes; ++c)
        if (logits[c] > logits[arg]) arg = c;
      *predicted_class = arg;
    }
  });
}

cvrl_status cvrl_augment_preview(const char* dataset_path, int32_t video_id, uint64_t seed,
                                 int32_t clip_length, int32_t stride, int32_t target_h,
                                 int32_t target_w, const char* out_dir) {
  if (cvrl_status s = require_arg(dataset_path && out_dir, "dataset_path/out_dir"); s != CVRL_OK)
    return s;
  return guarded([&] {
    cvrl::Dataset ds = cvrl::load_dataset(dataset_path);
    cvrl::augment_preview(ds, video_id, seed, clip_length, stride, target_h, target_w, out_dir);
  });
}

cvrl_status cvrl_shape_trace(int32_t t, int32_t s, char* buf, int32_t buf_len) {
  if (cvrl_status st = require_arg(buf && buf_len > 0, "buf"); st != CVRL_OK) return st;
  return guarded([&] {
    std::string text = cvrl::format_shape_trace(cvrl::R3D50Spec::table(), t, s);
    if (static_cast<int32_t>(text.size()) + 1 > buf_len)
      throw cvrl::bounds_error("shape trace buffer too small; need " +
                               std::to_string(text.size() + 1) + " bytes");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

}  // extern "C"
