/* C API for the contrastive video representation learning library.
 *
 * All functions return CVRL_OK on success; on failure they return an error
 * code and cvrl_last_error() carries a thread-local message. Handles are
 * opaque and owned by the caller via the matching _free function. */
#ifndef CVRL_H
#define CVRL_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cvrl_status {
  CVRL_OK = 0,
  CVRL_ERR_CONFIG = 1,
  CVRL_ERR_BOUNDS = 2,
  CVRL_ERR_IO = 3,
  CVRL_ERR_FORMAT = 4,
  CVRL_ERR_NUMERIC = 5,
  CVRL_ERR_STATE = 6,
  CVRL_ERR_ARGUMENT = 7,
  CVRL_ERR_INTERNAL = 8
} cvrl_status;

const char* cvrl_status_name(cvrl_status status);
const char* cvrl_last_error(void);

/* ---- datasets ---- */

typedef struct cvrl_dataset cvrl_dataset;

cvrl_status cvrl_dataset_generate(int32_t num_classes, int32_t videos_per_class, int32_t t_total,
                                  int32_t height, int32_t width, uint64_t seed,
                                  cvrl_dataset** out);
cvrl_status cvrl_dataset_load(const char* path, cvrl_dataset** out);
cvrl_status cvrl_dataset_save(const cvrl_dataset* dataset, const char* path);
cvrl_status cvrl_dataset_info(const cvrl_dataset* dataset, int32_t* num_videos,
                              int32_t* num_classes, int32_t* t_total, int32_t* height,
                              int32_t* width);
cvrl_status cvrl_dataset_subset(const cvrl_dataset* dataset, double fraction, uint64_t seed,
                                cvrl_dataset** out);
void cvrl_dataset_free(cvrl_dataset* dataset);

/* ---- temporal interval sampling ---- */

typedef struct cvrl_interval_dist cvrl_interval_dist;

/* presets: "dec-linear", "dec-sqrt", "dec-quad", "uniform", "inc-linear",
 * "inc-quad" */
cvrl_status cvrl_interval_dist_create(const char* preset, int32_t t_max,
                                      cvrl_interval_dist** out);
cvrl_status cvrl_interval_dist_cdf(const cvrl_interval_dist* dist, double t, double* out);
cvrl_status cvrl_interval_dist_sample(const cvrl_interval_dist* dist, uint64_t seed,
                                      int32_t count, int32_t* out);
void cvrl_interval_dist_free(cvrl_interval_dist* dist);

cvrl_status cvrl_sample_hist(const char* preset, int32_t t_max, int64_t n, uint64_t seed,
                             const char* out_csv);

/* ---- contrastive loss on raw rows ---- */

/* rows: 2*n_pairs x dim, row-major, unnormalized; mode 0 = one-sided,
 * 1 = symmetric. grad_out may be NULL; otherwise it receives 2*n_pairs*dim
 * values. */
cvrl_status cvrl_info_nce(const double* rows, int32_t n_pairs, int32_t dim, double tau,
                          int32_t mode, double* loss_out, double* grad_out);

/* ---- training and evaluation (JSON configs, schema_version 1) ---- */

cvrl_status cvrl_pretrain(const char* config_json, const char* out_dir);
cvrl_status cvrl_lr_schedule_dump(const char* config_json, const char* out_csv);

/* model_out may be NULL to skip saving the trained probe/classifier */
cvrl_status cvrl_linear_eval(const char* config_json, const char* train_path,
                             const char* eval_path, const char* model_out, double* top1);

/* fraction in (0, 1]; from_scratch != 0 ignores the checkpoint and trains
 * from random init */
cvrl_status cvrl_fine_tune(const char* config_json, const char* train_path,
                           const char* eval_path, double fraction, int32_t from_scratch,
                           const char* model_out, double* top1);

cvrl_status cvrl_dense_predict(const char* model_path, const char* dataset_path,
                               int32_t video_id, int32_t num_clips, int32_t num_crops,
                               double* logits_out, int32_t logits_capacity,
                               int32_t* num_classes_out, int32_t* predicted_class);

cvrl_status cvrl_augment_preview(const char* dataset_path, int32_t video_id, uint64_t seed,
                                 int32_t clip_length, int32_t stride, int32_t target_h,
                                 int32_t target_w, const char* out_dir);

/* writes the stage-shape table for a (t, s) input into buf (NUL-terminated) */
cvrl_status cvrl_shape_trace(int32_t t, int32_t s, char* buf, int32_t buf_len);

#ifdef __cplusplus
}
#endif

#endif /* CVRL_H */
