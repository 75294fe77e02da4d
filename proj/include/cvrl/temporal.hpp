#pragma once

#include <string>

#include "cvrl/rng.hpp"

namespace cvrl {

// Normalized power-law density P(t) = a*t^b + c over the continuous interval
// domain [0, t_max], with closed-form CDF F(t) = a/(b+1) * t^(b+1) + c*t.
struct IntervalDistribution {
  double a = 0.0;
  double b = 0.0;  // exponent, >= 0
  double c = 0.0;
  int t_max = 0;

  double pdf(double t) const;
  // F(t); throws on t outside [0, t_max]. F(0) = 0, F(t_max) = 1 within 1e-9.
  double cdf(double t) const;
};

// The six density shapes. Decreasing presets pin P(t_max) = 0, increasing
// presets pin P(0) = 0, Uniform is flat; all normalize to integrate to 1.
enum class DistributionPreset {
  dec_linear,  // P ∝ t_max − t
  dec_sqrt,    // P ∝ sqrt(t_max) − sqrt(t)
  dec_quad,    // P ∝ t_max² − t²
  uniform,
  inc_linear,  // P ∝ t
  inc_quad,    // P ∝ t²
};

const char* preset_name(DistributionPreset p);
DistributionPreset preset_from_name(const std::string& name);

IntervalDistribution from_preset(DistributionPreset preset, int t_max);

// Smallest integer t in [0, t_max] with F(t) >= v; binary search with
// O(log t_max) CDF evaluations, the closing bracket resolved to the upper
// bound.
int sample_interval_at(const IntervalDistribution& dist, double v);
int sample_interval(const IntervalDistribution& dist, Rng& rng);

// One positive pair: two clip start points separated by the drawn interval.
struct ClipPairSpec {
  int start1 = 0;
  int start2 = 0;
  int interval = 0;
};

// Draws t from dist, then start1 uniformly over [0, video_len - clip_span - t].
// Requires dist.t_max == video_len - clip_span so both clips always fit.
ClipPairSpec sample_clip_pair(const IntervalDistribution& dist, int video_len, int clip_span,
                              Rng& rng);

}  // namespace cvrl
