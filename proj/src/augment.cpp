#include "cvrl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cvrl/error.hpp"

namespace cvrl {

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;  // BT.601

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  float mx = std::max(r, std::max(g, b));
  float mn = std::min(r, std::min(g, b));
  float d = mx - mn;
  v = mx;
  s = mx > 0.0f ? d / mx : 0.0f;
  if (d <= 0.0f) {
    h = 0.0f;
    return;
  }
  if (mx == r) {
    h = (g - b) / d;
  } else if (mx == g) {
    h = 2.0f + (b - r) / d;
  } else {
    h = 4.0f + (r - g) / d;
  }
  h /= 6.0f;
  if (h < 0.0f) h += 1.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  h -= std::floor(h);
  float hh = h * 6.0f;
  int sector = std::min(5, static_cast<int>(hh));
  float f = hh - sector;
  float p = v * (1.0f - s);
  float q = v * (1.0f - s * f);
  float t = v * (1.0f - s * (1.0f - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

// One frame through the frozen transform; src is clip-source geometry,
// dst is params.target geometry.
void apply_to_frame(const float* src, int src_h, int src_w, const AugmentParams& p, float* dst) {
  crop_resize(src, src_h, src_w, p.crop, dst, p.target_h, p.target_w);
  if (p.flip) hflip(dst, p.target_h, p.target_w);
  if (p.jitter) color_jitter(dst, p.target_h, p.target_w, p);
  if (p.grey) greyscale(dst, p.target_h, p.target_w);
  gaussian_blur(dst, p.target_h, p.target_w, p.blur_sigma);
}

}  // namespace

CropRect derive_crop_wh(double area_fraction, double aspect, int source_h, int source_w) {
  double area = area_fraction * source_h * source_w;
  CropRect r;
  r.w = static_cast<int>(std::lround(std::sqrt(area * aspect)));
  r.h = static_cast<int>(std::lround(std::sqrt(area / aspect)));
  return r;
}

AugmentParams draw_params(Rng& rng, int source_h, int source_w, const JitterConfig& config,
                          int target_h, int target_w) {
  if (source_h < 8 || source_w < 8) throw config_error("draw_params: source must be at least 8x8");
  if (target_h < 1 || target_w < 1) throw config_error("draw_params: target must be positive");

  AugmentParams p;
  p.target_h = target_h;
  p.target_w = target_w;

  bool placed = false;
  for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
    double s = rng.uniform(config.min_area, config.max_area);
    double a = std::exp(rng.uniform(std::log(config.min_aspect), std::log(config.max_aspect)));
    CropRect r = derive_crop_wh(s, a, source_h, source_w);
    if (r.w >= 1 && r.h >= 1 && r.w <= source_w && r.h <= source_h) {
      r.x = static_cast<int>(rng.uniform_int(0, source_w - r.w));
      r.y = static_cast<int>(rng.uniform_int(0, source_h - r.h));
      p.crop = r;
      placed = true;
    }
  }
  if (!placed) {
    // largest centered crop with the aspect clamped into range
    double in_ratio = static_cast<double>(source_w) / source_h;
    CropRect r;
    if (in_ratio > config.max_aspect) {
      r.h = source_h;
      r.w = static_cast<int>(std::lround(source_h * config.max_aspect));
    } else if (in_ratio < config.min_aspect) {
      r.w = source_w;
      r.h = static_cast<int>(std::lround(source_w / config.min_aspect));
    } else {
      r.w = source_w;
      r.h = source_h;
    }
    r.x = (source_w - r.w) / 2;
    r.y = (source_h - r.h) / 2;
    p.crop = r;
  }

  p.flip = rng.bernoulli(config.p_flip);
  p.jitter = rng.bernoulli(config.p_jitter);
  p.grey = rng.bernoulli(config.p_grey);
  p.brightness_delta = rng.uniform(-config.max_brightness, config.max_brightness);
  p.contrast_factor = rng.uniform(std::max(0.0, 1.0 - config.max_contrast), 1.0 + config.max_contrast);
  p.saturation_factor =
      rng.uniform(std::max(0.0, 1.0 - config.max_saturation), 1.0 + config.max_saturation);
  p.hue_shift = rng.uniform(-config.max_hue, config.max_hue);
  for (int i = 3; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(p.jitter_order[i], p.jitter_order[j]);
  }
  p.blur_sigma = rng.uniform(config.min_blur_sigma, config.max_blur_sigma);
  return p;
}

void crop_resize(const float* src, int src_h, int src_w, const CropRect& rect, float* dst,
                 int dst_h, int dst_w) {
  if (rect.w < 1 || rect.h < 1 || rect.x < 0 || rect.y < 0 || rect.x + rect.w > src_w ||
      rect.y + rect.h > src_h)
    throw bounds_error("crop_resize: crop rect outside source frame");

  // bilinear, half-pixel centers, samples clamped to the crop rect
  double scale_y = static_cast<double>(rect.h) / dst_h;
  double scale_x = static_cast<double>(rect.w) / dst_w;
  for (int ty = 0; ty < dst_h; ++ty) {
    double sy = (ty + 0.5) * scale_y - 0.5;
    int y0 = static_cast<int>(std::floor(sy));
    float fy = static_cast<float>(sy - y0);
    int r0 = std::clamp(y0, 0, rect.h - 1);
    int r1 = std::clamp(y0 + 1, 0, rect.h - 1);
    const float* row0 = src + (static_cast<std::size_t>(rect.y + r0) * src_w + rect.x) * 3;
    const float* row1 = src + (static_cast<std::size_t>(rect.y + r1) * src_w + rect.x) * 3;
    float* out = dst + static_cast<std::size_t>(ty) * dst_w * 3;
    for (int tx = 0; tx < dst_w; ++tx) {
      double sx = (tx + 0.5) * scale_x - 0.5;
      int x0 = static_cast<int>(std::floor(sx));
      float fx = static_cast<float>(sx - x0);
      int c0 = std::clamp(x0, 0, rect.w - 1);
      int c1 = std::clamp(x0 + 1, 0, rect.w - 1);
      for (int ch = 0; ch < 3; ++ch) {
        float top = row0[c0 * 3 + ch] * (1.0f - fx) + row0[c1 * 3 + ch] * fx;
        float bot = row1[c0 * 3 + ch] * (1.0f - fx) + row1[c1 * 3 + ch] * fx;
        out[tx * 3 + ch] = clamp01(top * (1.0f - fy) + bot * fy);
      }
    }
  }
}

void hflip(float* frame, int h, int w) {
  for (int y = 0; y < h; ++y) {
    float* row = frame + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w / 2; ++x) {
      for (int ch = 0; ch < 3; ++ch) std::swap(row[x * 3 + ch], row[(w - 1 - x) * 3 + ch]);
    }
  }
}

void adjust_brightness(float* frame, int h, int w, double delta) {
  std::size_t n = static_cast<std::size_t>(h) * w * 3;
  float d = static_cast<float>(delta);
  for (std::size_t i = 0; i < n; ++i) frame[i] = clamp01(frame[i] + d);
}

void adjust_contrast(float* frame, int h, int w, double factor) {
  std::size_t pixels = static_cast<std::size_t>(h) * w;
  double mean = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    const float* px = frame + i * 3;
    mean += kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2];
  }
  mean /= static_cast<double>(pixels);
  float m = static_cast<float>(mean);
  float f = static_cast<float>(factor);
  for (std::size_t i = 0; i < pixels * 3; ++i) frame[i] = clamp01(m + f * (frame[i] - m));
}

void adjust_saturation(float* frame, int h, int w, double factor) {
  std::size_t pixels = static_cast<std::size_t>(h) * w;
  float f = static_cast<float>(factor);
  for (std::size_t i = 0; i < pixels; ++i) {
    float* px = frame + i * 3;
    float grey = static_cast<float>(kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2]);
    for (int ch = 0; ch < 3; ++ch) px[ch] = clamp01(grey + f * (px[ch] - grey));
  }
}

void adjust_hue(float* frame, int h, int w, double shift) {
  std::size_t pixels = static_cast<std::size_t>(h) * w;
  float sh = static_cast<float>(shift);
  for (std::size_t i = 0; i < pixels; ++i) {
    float* px = frame + i * 3;
    float hh, ss, vv;
    rgb_to_hsv(px[0], px[1], px[2], hh, ss, vv);
    hsv_to_rgb(hh + sh, ss, vv, px[0], px[1], px[2]);
    for (int ch = 0; ch < 3; ++ch) px[ch] = clamp01(px[ch]);
  }
}

void color_jitter(float* frame, int h, int w, const AugmentParams& params) {
  for (int op : params.jitter_order) {
    switch (op) {
      case 0: adjust_brightness(frame, h, w, params.brightness_delta); break;
      case 1: adjust_contrast(frame, h, w, params.contrast_factor); break;
      case 2: adjust_saturation(frame, h, w, params.saturation_factor); break;
      case 3: adjust_hue(frame, h, w, params.hue_shift); break;
      default: throw config_error("color_jitter: bad sub-operation index");
    }
  }
}

void greyscale(float* frame, int h, int w) {
  std::size_t pixels = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < pixels; ++i) {
    float* px = frame + i * 3;
    float y = static_cast<float>(kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2]);
    y = clamp01(y);
    px[0] = px[1] = px[2] = y;
  }
}

void gaussian_blur(float* frame, int h, int w, double sigma) {
  if (sigma <= 0.0) return;
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  if (radius < 1) return;
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (float& k : kernel) k = static_cast<float>(k / sum);

  std::vector<float> tmp(static_cast<std::size_t>(h) * w * 3);
  // horizontal pass, edge-clamped
  for (int y = 0; y < h; ++y) {
    const float* row = frame + static_cast<std::size_t>(y) * w * 3;
    float* out = tmp.data() + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k) {
          int xx = std::clamp(x + k, 0, w - 1);
          acc += kernel[k + radius] * row[xx * 3 + ch];
        }
        out[x * 3 + ch] = acc;
      }
    }
  }
  // vertical pass
  for (int y = 0; y < h; ++y) {
    float* out = frame + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k) {
          int yy = std::clamp(y + k, 0, h - 1);
          acc += kernel[k + radius] * tmp[(static_cast<std::size_t>(yy) * w + x) * 3 + ch];
        }
        out[x * 3 + ch] = clamp01(acc);
      }
    }
  }
}

Clip apply(const Clip& clip, const AugmentParams& params) {
  if (params.crop.x < 0 || params.crop.y < 0 || params.crop.w < 1 || params.crop.h < 1 ||
      params.crop.x + params.crop.w > clip.width || params.crop.y + params.crop.h > clip.height)
    throw bounds_error("apply: crop rect does not fit clip frames");
  if (params.target_h < 1 || params.target_w < 1)
    throw bounds_error("apply: bad target geometry");

  Clip out;
  out.length = clip.length;
  out.height = params.target_h;
  out.width = params.target_w;
  out.source_video_id = clip.source_video_id;
  out.start_frame = clip.start_frame;
  out.values.resize(static_cast<std::size_t>(clip.length) * out.frame_size());
  for (int k = 0; k < clip.length; ++k)
    apply_to_frame(clip.frame(k), clip.height, clip.width, params, out.frame(k));
  return out;
}

Clip augment_clip(const Clip& clip, Rng& rng, const JitterConfig& config, int target_h,
                  int target_w, Consistency mode) {
  if (mode == Consistency::consistent) {
    AugmentParams p = draw_params(rng, clip.height, clip.width, config, target_h, target_w);
    return apply(clip, p);
  }
  // ablation path: fresh randomness per frame, same kernels
  Clip out;
  out.length = clip.length;
  out.height = target_h;
  out.width = target_w;
  out.source_video_id = clip.source_video_id;
  out.start_frame = clip.start_frame;
  out.values.resize(static_cast<std::size_t>(clip.length) * out.frame_size());
  for (int k = 0; k < clip.length; ++k) {
    AugmentParams p = draw_params(rng, clip.height, clip.width, config, target_h, target_w);
    apply_to_frame(clip.frame(k), clip.height, clip.width, p, out.frame(k));
  }
  return out;
}

}  // namespace cvrl
