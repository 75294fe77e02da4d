#pragma once

#include <array>

#include "cvrl/rng.hpp"
#include "cvrl/video.hpp"

namespace cvrl {

// Probabilities and magnitudes for the per-clip randomness draw. Flag
// probabilities (flip 0.5, jitter 0.8, grey 0.2) follow the augmentation
// procedure; jitter strengths default to the SimCLR-style 0.8/0.8/0.8/0.2.
struct JitterConfig {
  double max_brightness = 0.8;
  double max_contrast = 0.8;
  double max_saturation = 0.8;
  double max_hue = 0.2;
  double p_flip = 0.5;
  double p_jitter = 0.8;
  double p_grey = 0.2;
  double min_area = 0.3;
  double max_area = 1.0;
  double min_aspect = 0.5;
  double max_aspect = 2.0;
  double min_blur_sigma = 0.1;
  double max_blur_sigma = 2.0;
};

struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

// One frozen draw of all spatial-augmentation randomness. Applying it to a
// clip uses the identical transform for every frame.
struct AugmentParams {
  CropRect crop;
  int target_h = 0;
  int target_w = 0;
  bool flip = false;
  bool jitter = false;
  bool grey = false;
  double brightness_delta = 0.0;
  double contrast_factor = 1.0;
  double saturation_factor = 1.0;
  double hue_shift = 0.0;
  std::array<int, 4> jitter_order{0, 1, 2, 3};  // 0 brightness, 1 contrast, 2 saturation, 3 hue
  double blur_sigma = 0.0;                      // 0 disables the blur pass
};

// Crop size for area fraction s and aspect ratio a on an h x w frame.
CropRect derive_crop_wh(double area_fraction, double aspect, int source_h, int source_w);

AugmentParams draw_params(Rng& rng, int source_h, int source_w, const JitterConfig& config,
                          int target_h, int target_w);

// Pure function of (clip, params): crop -> bilinear resize -> flip -> color
// jitter -> greyscale -> gaussian blur, clamped to [0,1] after every step.
Clip apply(const Clip& clip, const AugmentParams& params);

enum class Consistency { consistent, per_frame };

// consistent: one draw_params for the whole clip. per_frame: parameters are
// redrawn for every frame (the ablation path); both share the frame kernels.
Clip augment_clip(const Clip& clip, Rng& rng, const JitterConfig& config, int target_h,
                  int target_w, Consistency mode);

// Frame kernels. Frames are h*w*3 unit-interval buffers; every kernel clamps
// its output to [0,1].
void crop_resize(const float* src, int src_h, int src_w, const CropRect& rect, float* dst,
                 int dst_h, int dst_w);
void hflip(float* frame, int h, int w);
void adjust_brightness(float* frame, int h, int w, double delta);
void adjust_contrast(float* frame, int h, int w, double factor);
void adjust_saturation(float* frame, int h, int w, double factor);
void adjust_hue(float* frame, int h, int w, double shift);
void color_jitter(float* frame, int h, int w, const AugmentParams& params);
void greyscale(float* frame, int h, int w);
void gaussian_blur(float* frame, int h, int w, double sigma);

}  // namespace cvrl
