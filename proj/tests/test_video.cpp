#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cvrl/error.hpp"
#include "cvrl/video.hpp"

using namespace cvrl;

namespace {

// tiny geometry keeps unit tests fast; the acceptance suite generates the
// full-scale corpus
Dataset small_dataset(std::uint64_t seed = 7) {
  return generate_synthetic_dataset(4, 5, 64, 32, 32, seed);
}

std::string temp_path(const char* name) {
  return std::string("/tmp/cvrl_test_") + name;
}

}  // namespace

TEST_CASE("generation produces balanced, densely numbered videos") {
  Dataset ds = small_dataset();
  CHECK(ds.videos.size() == 20);
  CHECK(ds.num_classes == 4);
  std::vector<int> per_class(4, 0);
  for (std::size_t i = 0; i < ds.videos.size(); ++i) {
    CHECK(ds.videos[i].video_id == i);  // dense ids in [0, len)
    per_class[ds.videos[i].label]++;
  }
  for (int c : per_class) CHECK(c == 5);
}

TEST_CASE("generation is a pure function of the seed") {
  Dataset a = small_dataset(7);
  Dataset b = small_dataset(7);
  REQUIRE(a.videos.size() == b.videos.size());
  for (std::size_t i = 0; i < a.videos.size(); ++i) {
    CHECK(a.videos[i].frames == b.videos[i].frames);
    CHECK(a.videos[i].label == b.videos[i].label);
  }
  Dataset c = small_dataset(8);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.videos.size() && !any_diff; ++i)
    any_diff = a.videos[i].frames != c.videos[i].frames;
  CHECK(any_diff);
}

TEST_CASE("generation rejects bad configuration") {
  CHECK_THROWS_AS(generate_synthetic_dataset(1, 10, 128, 64, 64, 0), Error);  // < 2 classes
  CHECK_THROWS_AS(generate_synthetic_dataset(4, 10, 32, 64, 64, 0), Error);   // too short
  CHECK_THROWS_AS(generate_synthetic_dataset(4, 10, 128, 16, 64, 0), Error);  // too small
}

TEST_CASE("extract_clip indexes strided raw frames") {
  RawVideo v;
  v.video_id = 3;
  v.t_total = 250;
  v.height = 8;
  v.width = 8;
  v.frames.resize(static_cast<std::size_t>(250) * 8 * 8 * 3);
  for (int t = 0; t < 250; ++t) {
    std::uint8_t fill = static_cast<std::uint8_t>(t);
    std::fill_n(v.frames.begin() + static_cast<std::size_t>(t) * 8 * 8 * 3, 8 * 8 * 3, fill);
  }

  Clip clip = extract_clip(v, 0, 16, 2);
  CHECK(clip.length == 16);
  CHECK(clip.source_video_id == 3);
  CHECK(clip_raw_span(16, 2) == 32);
  for (int k = 0; k < 16; ++k) {
    // frame k equals raw frame start + k*stride, rescaled by 1/255
    CHECK(clip.frame(k)[0] == doctest::Approx((2 * k) / 255.0).epsilon(1e-7));
  }
}

TEST_CASE("extract_clip scales the 8-bit endpoints exactly") {
  RawVideo v;
  v.t_total = 2;
  v.height = 1;
  v.width = 2;
  v.frames = {255, 255, 255, 0, 0, 0, 255, 0, 128, 0, 255, 64};
  Clip clip = extract_clip(v, 0, 2, 1);
  CHECK(clip.values[0] == 1.0f);
  CHECK(clip.values[3] == 0.0f);
}

TEST_CASE("extract_clip rejects out-of-range extraction") {
  RawVideo v;
  v.t_total = 250;
  v.height = 4;
  v.width = 4;
  v.frames.resize(static_cast<std::size_t>(250) * 4 * 4 * 3);
  CHECK_THROWS_AS(extract_clip(v, 240, 16, 2), Error);  // would need frame 270
  CHECK_THROWS_AS(extract_clip(v, -1, 16, 2), Error);
  CHECK_NOTHROW(extract_clip(v, 218, 16, 2));  // last valid start
}

TEST_CASE("dataset round-trip is bit-exact") {
  Dataset ds = small_dataset(11);
  std::string path = temp_path("roundtrip.bin");
  save_dataset(ds, path);
  Dataset back = load_dataset(path);
  CHECK(back.num_classes == ds.num_classes);
  CHECK(back.generation_seed == ds.generation_seed);
  CHECK(back.t_total == ds.t_total);
  REQUIRE(back.videos.size() == ds.videos.size());
  for (std::size_t i = 0; i < ds.videos.size(); ++i) {
    CHECK(back.videos[i].video_id == ds.videos[i].video_id);
    CHECK(back.videos[i].label == ds.videos[i].label);
    CHECK(back.videos[i].frames == ds.videos[i].frames);
  }
  std::remove(path.c_str());
}

TEST_CASE("load rejects wrong magic") {
  std::string path = temp_path("badmagic.bin");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTCVRL" << '\0' << "garbage";
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("magic"), Error);
  std::remove(path.c_str());
}

TEST_CASE("load reports truncation with an offset") {
  Dataset ds = small_dataset(13);
  std::string path = temp_path("trunc.bin");
  save_dataset(ds, path);
  // chop the last video short
  {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    long size = static_cast<long>(in.tellg());
    in.close();
    std::filesystem::resize_file(path, size - 1000);
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("offset"), Error);
  std::remove(path.c_str());
}

TEST_CASE("load of a missing file is an io error") {
  try {
    load_dataset("/tmp/cvrl_does_not_exist.bin");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}
