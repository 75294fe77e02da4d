#include "cvrl/video.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "cvrl/error.hpp"
#include "cvrl/parallel.hpp"
#include "cvrl/rng.hpp"

namespace cvrl {

namespace {

constexpr char kDatasetMagic[8] = {'C', 'V', 'R', 'L', 'D', 'S', '1', '\0'};
constexpr double kPi = 3.14159265358979323846;

// stream tags for derive_seed
constexpr std::uint64_t kTagVideo = 0x76696400;  // "vid"

struct HsvColor {
  double h, s, v;  // h in [0,1)
};

void hsv_to_rgb(const HsvColor& c, double rgb[3]) {
  double h = (c.h - std::floor(c.h)) * 6.0;
  int sector = static_cast<int>(h) % 6;
  double f = h - std::floor(h);
  double p = c.v * (1.0 - c.s);
  double q = c.v * (1.0 - c.s * f);
  double t = c.v * (1.0 - c.s * (1.0 - f));
  switch (sector) {
    case 0: rgb[0] = c.v; rgb[1] = t; rgb[2] = p; break;
    case 1: rgb[0] = q; rgb[1] = c.v; rgb[2] = p; break;
    case 2: rgb[0] = p; rgb[1] = c.v; rgb[2] = t; break;
    case 3: rgb[0] = p; rgb[1] = q; rgb[2] = c.v; break;
    case 4: rgb[0] = t; rgb[1] = p; rgb[2] = c.v; break;
    default: rgb[0] = c.v; rgb[1] = p; rgb[2] = q; break;
  }
}

inline std::uint8_t to_u8(double v) {
  double x = std::lround(v * 255.0);
  return static_cast<std::uint8_t>(std::clamp(x, 0.0, 255.0));
}

// Class archetypes: direction is unique per class; hue and background texture
// repeat between paired classes (c and c + ceil(C/2) share them), so spatial
// cues alone separate only the pairs and motion is needed for the rest.
struct ClassArchetype {
  double direction;
  double speed;
  double hue;
  int texture;        // 0 horizontal stripes, 1 vertical stripes
  double stripe_period;
};

ClassArchetype class_archetype(int c, int num_classes) {
  int half = (num_classes + 1) / 2;
  ClassArchetype a;
  a.direction = 2.0 * kPi * c / num_classes;
  a.speed = 1.2 + 0.3 * (c % 3);
  a.hue = static_cast<double>(c % half) / half;
  a.texture = (c % half) % 2;
  a.stripe_period = 8.0 + 4.0 * ((c % half) % 3);
  return a;
}

void render_video(RawVideo& video, const ClassArchetype& arch, std::uint64_t video_seed) {
  Rng rng(video_seed);
  const int T = video.t_total, H = video.height, W = video.width;

  double direction = arch.direction + rng.uniform(-0.2, 0.2);
  double speed = arch.speed * rng.uniform(0.85, 1.15);
  double hue = arch.hue + rng.uniform(-0.05, 0.05);
  double rect_w = rng.uniform(0.18, 0.30) * W;
  double rect_h = rng.uniform(0.15, 0.28) * H;
  double x0 = rng.uniform(0.0, W);
  double y0 = rng.uniform(0.0, H);
  double bg_phase = rng.uniform(0.0, arch.stripe_period);
  double bg_base = rng.uniform(0.15, 0.30);
  double bg_amp = rng.uniform(0.08, 0.14);
  double period = arch.stripe_period + rng.uniform(-1.5, 1.5);

  double rect_rgb[3];
  hsv_to_rgb({hue, rng.uniform(0.8, 1.0), rng.uniform(0.75, 0.95)}, rect_rgb);

  double vx = speed * std::cos(direction);
  double vy = speed * std::sin(direction);
  int rw = std::max(2, static_cast<int>(std::lround(rect_w)));
  int rh = std::max(2, static_cast<int>(std::lround(rect_h)));

  video.frames.resize(static_cast<std::size_t>(T) * H * W * 3);
  for (int t = 0; t < T; ++t) {
    // wrap-around motion keeps the direction constant for the whole video
    double px = std::fmod(std::fmod(x0 + vx * t, W) + W, W);
    double py = std::fmod(std::fmod(y0 + vy * t, H) + H, H);
    int ix = static_cast<int>(px);
    int iy = static_cast<int>(py);
    std::uint8_t* frame = video.frames.data() + static_cast<std::size_t>(t) * H * W * 3;
    for (int y = 0; y < H; ++y) {
      int dy = y - iy;
      if (dy < 0) dy += H;
      bool in_y = dy < rh;
      double stripe_y = bg_base + bg_amp * std::sin(2.0 * kPi * (y + bg_phase) / period);
      std::uint8_t* row = frame + static_cast<std::size_t>(y) * W * 3;
      for (int x = 0; x < W; ++x) {
        int dx = x - ix;
        if (dx < 0) dx += W;
        std::uint8_t* px3 = row + 3 * x;
        if (in_y && dx < rw) {
          px3[0] = to_u8(rect_rgb[0]);
          px3[1] = to_u8(rect_rgb[1]);
          px3[2] = to_u8(rect_rgb[2]);
        } else {
          double bg = arch.texture == 0
                          ? stripe_y
                          : bg_base + bg_amp * std::sin(2.0 * kPi * (x + bg_phase) / period);
          std::uint8_t g = to_u8(bg);
          px3[0] = g;
          px3[1] = g;
          px3[2] = g;
        }
      }
    }
  }
}

void write_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  if (std::fwrite(b, 1, 4, f) != 4) throw io_error("dataset write failed");
}

void write_u64(std::FILE* f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  if (std::fwrite(b, 1, 8, f) != 8) throw io_error("dataset write failed");
}

std::uint32_t read_u32(std::FILE* f, const char* what, long offset_hint) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4)
    throw format_error(std::string("truncated dataset file: expected ") + what + " at offset " +
                       std::to_string(offset_hint));
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::FILE* f, const char* what, long offset_hint) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8)
    throw format_error(std::string("truncated dataset file: expected ") + what + " at offset " +
                       std::to_string(offset_hint));
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Dataset generate_synthetic_dataset(int num_classes, int videos_per_class, int t_total,
                                   int height, int width, std::uint64_t seed) {
  if (num_classes < 2) throw config_error("generate_synthetic_dataset: num_classes must be >= 2");
  if (videos_per_class < 1)
    throw config_error("generate_synthetic_dataset: videos_per_class must be >= 1");
  if (t_total < 64) throw config_error("generate_synthetic_dataset: T_total must be >= 64");
  if (height < 32 || width < 32)
    throw config_error("generate_synthetic_dataset: frame size must be at least 32x32");

  Dataset ds;
  ds.num_classes = static_cast<std::uint32_t>(num_classes);
  ds.generation_seed = seed;
  ds.t_total = t_total;
  ds.height = height;
  ds.width = width;
  ds.videos.resize(static_cast<std::size_t>(num_classes) * videos_per_class);

  parallel_for(static_cast<int>(ds.videos.size()), [&](int i) {
    RawVideo& v = ds.videos[i];
    v.video_id = static_cast<std::uint32_t>(i);
    v.label = static_cast<std::uint32_t>(i / videos_per_class);
    v.t_total = t_total;
    v.height = height;
    v.width = width;
    render_video(v, class_archetype(static_cast<int>(v.label), num_classes),
                 derive_seed(seed, kTagVideo, static_cast<std::uint64_t>(i)));
  });
  return ds;
}

Clip extract_clip(const RawVideo& video, int start, int length, int stride) {
  if (length < 1 || stride < 1) throw config_error("extract_clip: length and stride must be >= 1");
  if (start < 0 || start + (length - 1) * stride >= video.t_total)
    throw bounds_error("extract_clip: frames [" + std::to_string(start) + ", " +
                       std::to_string(start + (length - 1) * stride) + "] out of range for video of " +
                       std::to_string(video.t_total) + " frames");

  Clip clip;
  clip.length = length;
  clip.height = video.height;
  clip.width = video.width;
  clip.source_video_id = video.video_id;
  clip.start_frame = start;
  clip.values.resize(static_cast<std::size_t>(length) * clip.frame_size());
  const float inv255 = 1.0f / 255.0f;
  for (int k = 0; k < length; ++k) {
    const std::uint8_t* src = video.frame(start + k * stride);
    float* dst = clip.frame(k);
    for (std::size_t i = 0; i < clip.frame_size(); ++i) dst[i] = src[i] * inv255;
  }
  return clip;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw io_error("cannot open '" + path + "' for writing");
  if (std::fwrite(kDatasetMagic, 1, 8, f.get()) != 8) throw io_error("dataset write failed");
  write_u32(f.get(), dataset.num_classes);
  write_u32(f.get(), static_cast<std::uint32_t>(dataset.videos.size()));
  write_u32(f.get(), static_cast<std::uint32_t>(dataset.t_total));
  write_u32(f.get(), static_cast<std::uint32_t>(dataset.height));
  write_u32(f.get(), static_cast<std::uint32_t>(dataset.width));
  write_u64(f.get(), dataset.generation_seed);
  for (const RawVideo& v : dataset.videos) {
    write_u32(f.get(), v.video_id);
    write_u32(f.get(), v.label);
    if (std::fwrite(v.frames.data(), 1, v.frames.size(), f.get()) != v.frames.size())
      throw io_error("dataset write failed for video " + std::to_string(v.video_id));
  }
  if (std::fflush(f.get()) != 0) throw io_error("dataset flush failed");
}

DatasetInfo read_dataset_header(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw io_error("cannot open '" + path + "' for reading");
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8)
    throw format_error("truncated dataset file: missing magic at offset 0");
  if (std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw format_error("bad magic bytes: not a CVRLDS1 dataset file");
  DatasetInfo info;
  info.num_classes = read_u32(f.get(), "num_classes", 8);
  info.num_videos = read_u32(f.get(), "num_videos", 12);
  info.t_total = static_cast<int>(read_u32(f.get(), "t_total", 16));
  info.height = static_cast<int>(read_u32(f.get(), "height", 20));
  info.width = static_cast<int>(read_u32(f.get(), "width", 24));
  info.generation_seed = read_u64(f.get(), "generation_seed", 28);
  return info;
}

Dataset load_dataset(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw io_error("cannot open '" + path + "' for reading");

  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8)
    throw format_error("truncated dataset file: missing magic at offset 0");
  if (std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw format_error("bad magic bytes: not a CVRLDS1 dataset file");

  Dataset ds;
  ds.num_classes = read_u32(f.get(), "num_classes", 8);
  std::uint32_t num_videos = read_u32(f.get(), "num_videos", 12);
  ds.t_total = static_cast<int>(read_u32(f.get(), "t_total", 16));
  ds.height = static_cast<int>(read_u32(f.get(), "height", 20));
  ds.width = static_cast<int>(read_u32(f.get(), "width", 24));
  ds.generation_seed = read_u64(f.get(), "generation_seed", 28);
  if (ds.t_total <= 0 || ds.height <= 0 || ds.width <= 0)
    throw format_error("dataset header has non-positive geometry");

  std::size_t frame_bytes = static_cast<std::size_t>(ds.t_total) * ds.height * ds.width * 3;
  ds.videos.resize(num_videos);
  long offset = 36;
  for (std::uint32_t i = 0; i < num_videos; ++i) {
    RawVideo& v = ds.videos[i];
    v.video_id = read_u32(f.get(), "video_id", offset);
    v.label = read_u32(f.get(), "label", offset + 4);
    v.t_total = ds.t_total;
    v.height = ds.height;
    v.width = ds.width;
    v.frames.resize(frame_bytes);
    std::size_t got = std::fread(v.frames.data(), 1, frame_bytes, f.get());
    if (got != frame_bytes)
      throw format_error("truncated dataset file: video " + std::to_string(i) + " frame data at offset " +
                         std::to_string(offset + 8) + ": expected " + std::to_string(frame_bytes) +
                         " bytes, got " + std::to_string(got));
    offset += 8 + static_cast<long>(frame_bytes);
  }
  return ds;
}

}  // namespace cvrl
