#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cvrl {

// A labeled sequence of 8-bit RGB frames. Storage is frame-major
// (t, y, x, channel), all frames share one geometry.
struct RawVideo {
  std::uint32_t video_id = 0;
  std::uint32_t label = 0;
  int t_total = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> frames;  // t_total * height * width * 3

  std::size_t frame_bytes() const { return static_cast<std::size_t>(height) * width * 3; }
  const std::uint8_t* frame(int t) const { return frames.data() + static_cast<std::size_t>(t) * frame_bytes(); }
};

// A fixed-length stack of unit-interval RGB frames extracted from a RawVideo.
struct Clip {
  int length = 0;
  int height = 0;
  int width = 0;
  std::uint32_t source_video_id = 0;
  int start_frame = 0;
  std::vector<float> values;  // length * height * width * 3, in [0, 1]

  std::size_t frame_size() const { return static_cast<std::size_t>(height) * width * 3; }
  float* frame(int k) { return values.data() + static_cast<std::size_t>(k) * frame_size(); }
  const float* frame(int k) const { return values.data() + static_cast<std::size_t>(k) * frame_size(); }
};

struct Dataset {
  std::uint32_t num_classes = 0;
  std::uint64_t generation_seed = 0;
  int t_total = 0;
  int height = 0;
  int width = 0;
  std::vector<RawVideo> videos;  // video_ids dense in [0, size)
};

// Raw-frame span of a strided clip: extraction reads frames
// start, start+stride, ..., start+(length-1)*stride.
inline int clip_raw_span(int length, int stride) { return length * stride; }

// Synthetic labeled-motion corpus. Each class is a distinct archetype: a
// colored rectangle with class-determined (direction, speed, color family,
// background texture) and per-video jitter. Pure function of the seed.
Dataset generate_synthetic_dataset(int num_classes, int videos_per_class, int t_total,
                                   int height, int width, std::uint64_t seed);

Clip extract_clip(const RawVideo& video, int start, int length, int stride);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Header fields only; does not read frame data.
struct DatasetInfo {
  std::uint32_t num_classes = 0;
  std::uint32_t num_videos = 0;
  int t_total = 0;
  int height = 0;
  int width = 0;
  std::uint64_t generation_seed = 0;
};
DatasetInfo read_dataset_header(const std::string& path);

}  // namespace cvrl
