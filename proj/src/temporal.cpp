#include "cvrl/temporal.hpp"

#include <cmath>

#include "cvrl/error.hpp"

namespace cvrl {

double IntervalDistribution::pdf(double t) const { return a * std::pow(t, b) + c; }

double IntervalDistribution::cdf(double t) const {
  if (t < 0.0 || t > static_cast<double>(t_max))
    throw bounds_error("cdf: t = " + std::to_string(t) + " outside [0, " + std::to_string(t_max) + "]");
  return a / (b + 1.0) * std::pow(t, b + 1.0) + c * t;
}

const char* preset_name(DistributionPreset p) {
  switch (p) {
    case DistributionPreset::dec_linear: return "dec-linear";
    case DistributionPreset::dec_sqrt: return "dec-sqrt";
    case DistributionPreset::dec_quad: return "dec-quad";
    case DistributionPreset::uniform: return "uniform";
    case DistributionPreset::inc_linear: return "inc-linear";
    case DistributionPreset::inc_quad: return "inc-quad";
  }
  return "unknown";
}

DistributionPreset preset_from_name(const std::string& name) {
  if (name == "dec-linear") return DistributionPreset::dec_linear;
  if (name == "dec-sqrt") return DistributionPreset::dec_sqrt;
  if (name == "dec-quad") return DistributionPreset::dec_quad;
  if (name == "uniform") return DistributionPreset::uniform;
  if (name == "inc-linear") return DistributionPreset::inc_linear;
  if (name == "inc-quad") return DistributionPreset::inc_quad;
  throw config_error("unknown distribution preset '" + name + "'");
}

IntervalDistribution from_preset(DistributionPreset preset, int t_max) {
  if (t_max < 1) throw config_error("from_preset: interval domain upper bound must be >= 1");
  const double T = t_max;
  IntervalDistribution d;
  d.t_max = t_max;
  switch (preset) {
    case DistributionPreset::dec_linear:
      // P(T)=0: c = -aT; normalize: -aT²/2 = 1
      d.b = 1.0;
      d.a = -2.0 / (T * T);
      d.c = 2.0 / T;
      break;
    case DistributionPreset::dec_sqrt:
      // P(T)=0 with b=1/2: c = -a√T; normalize: -aT^1.5/3 = 1
      d.b = 0.5;
      d.a = -3.0 / std::pow(T, 1.5);
      d.c = 3.0 / T;
      break;
    case DistributionPreset::dec_quad:
      // P(T)=0: c = -aT²; normalize: -2aT³/3 = 1
      d.b = 2.0;
      d.a = -1.5 / (T * T * T);
      d.c = 1.5 / T;
      break;
    case DistributionPreset::uniform:
      d.b = 1.0;
      d.a = 0.0;
      d.c = 1.0 / T;
      break;
    case DistributionPreset::inc_linear:
      // P(0)=0: c = 0; normalize: aT²/2 = 1
      d.b = 1.0;
      d.a = 2.0 / (T * T);
      d.c = 0.0;
      break;
    case DistributionPreset::inc_quad:
      d.b = 2.0;
      d.a = 3.0 / (T * T * T);
      d.c = 0.0;
      break;
  }
  return d;
}

int sample_interval_at(const IntervalDistribution& dist, double v) {
  if (v <= dist.cdf(0.0)) return 0;
  int lo = 0, hi = dist.t_max;
  // invariant: F(lo) < v; the answer lies in (lo, hi]
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (dist.cdf(mid) >= v) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

int sample_interval(const IntervalDistribution& dist, Rng& rng) {
  return sample_interval_at(dist, rng.uniform01());
}

ClipPairSpec sample_clip_pair(const IntervalDistribution& dist, int video_len, int clip_span,
                              Rng& rng) {
  if (video_len < clip_span)
    throw config_error("sample_clip_pair: video of " + std::to_string(video_len) +
                       " frames cannot hold a clip of raw span " + std::to_string(clip_span));
  if (dist.t_max != video_len - clip_span)
    throw config_error("sample_clip_pair: distribution domain [0, " + std::to_string(dist.t_max) +
                       "] does not match video_len - clip_span = " +
                       std::to_string(video_len - clip_span));
  ClipPairSpec pair;
  pair.interval = sample_interval(dist, rng);
  int max_start = video_len - clip_span - pair.interval;
  pair.start1 = static_cast<int>(rng.uniform_int(0, max_start));
  pair.start2 = pair.start1 + pair.interval;
  return pair;
}

}  // namespace cvrl
