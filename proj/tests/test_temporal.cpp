#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvrl/error.hpp"
#include "cvrl/temporal.hpp"

using namespace cvrl;

namespace {

const DistributionPreset kAllPresets[] = {
    DistributionPreset::dec_linear, DistributionPreset::dec_sqrt, DistributionPreset::dec_quad,
    DistributionPreset::uniform,    DistributionPreset::inc_linear, DistributionPreset::inc_quad,
};

// Independent oracle: composite Simpson quadrature of the density.
double quad_pdf(const IntervalDistribution& d, double lo, double hi, int slices = 4096) {
  double h = (hi - lo) / slices;
  double acc = d.pdf(lo) + d.pdf(hi);
  for (int i = 1; i < slices; ++i) acc += d.pdf(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double quad_mean(const IntervalDistribution& d, int slices = 4096) {
  double hi = d.t_max;
  double h = hi / slices;
  auto f = [&](double t) { return t * d.pdf(t); };
  double acc = f(0.0) + f(hi);
  for (int i = 1; i < slices; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("dec-linear preset matches the hand-derived coefficients") {
  IntervalDistribution d = from_preset(DistributionPreset::dec_linear, 100);
  CHECK(d.a == doctest::Approx(-2.0 / 1e4).epsilon(1e-12));
  CHECK(d.b == doctest::Approx(1.0));
  CHECK(d.c == doctest::Approx(2.0 / 100).epsilon(1e-12));
}

TEST_CASE("uniform preset is flat with density 1/T") {
  IntervalDistribution d = from_preset(DistributionPreset::uniform, 100);
  CHECK(d.a == 0.0);
  CHECK(d.c == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("inc-linear preset: P(t) = 2t/T^2, F(t) = t^2/T^2") {
  IntervalDistribution d = from_preset(DistributionPreset::inc_linear, 100);
  CHECK(d.pdf(50.0) == doctest::Approx(2.0 * 50 / 1e4).epsilon(1e-12));
  CHECK(d.cdf(50.0) == doctest::Approx(50.0 * 50.0 / 1e4).epsilon(1e-12));
}

TEST_CASE("every preset normalizes and stays nonnegative") {
  for (DistributionPreset p : kAllPresets) {
    for (int T : {1, 7, 100, 218}) {
      IntervalDistribution d = from_preset(p, T);
      INFO(preset_name(p), " T=", T);
      CHECK(quad_pdf(d, 0.0, T) == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(d.cdf(0.0) == 0.0);
      CHECK(d.cdf(T) == doctest::Approx(1.0).epsilon(1e-9));
      for (int t = 0; t <= T; ++t) CHECK(d.pdf(t) >= -1e-12);
    }
  }
}

TEST_CASE("closed-form CDF agrees with quadrature of the density") {
  // Simpson converges slowly through the sqrt kink at t=0, hence 1e-5 relative
  for (DistributionPreset p : kAllPresets) {
    IntervalDistribution d = from_preset(p, 218);
    for (double t : {1.0, 17.0, 109.0, 217.0}) {
      INFO(preset_name(p), " t=", t);
      CHECK(d.cdf(t) == doctest::Approx(quad_pdf(d, 0.0, t)).epsilon(1e-5));
    }
  }
}

TEST_CASE("dec-linear T=100: F(50) = 0.75") {
  IntervalDistribution d = from_preset(DistributionPreset::dec_linear, 100);
  CHECK(d.cdf(50.0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("cdf is monotone nondecreasing for every preset") {
  Rng rng(41);
  for (DistributionPreset p : kAllPresets) {
    for (int rep = 0; rep < 20; ++rep) {
      int T = static_cast<int>(rng.uniform_int(1, 400));
      IntervalDistribution d = from_preset(p, T);
      double prev = d.cdf(0.0);
      for (int t = 1; t <= T; ++t) {
        double cur = d.cdf(t);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
      }
    }
  }
}

TEST_CASE("cdf rejects arguments outside the domain") {
  IntervalDistribution d = from_preset(DistributionPreset::uniform, 100);
  CHECK_THROWS_AS(d.cdf(-0.5), Error);
  CHECK_THROWS_AS(d.cdf(100.5), Error);
}

TEST_CASE("sample_interval inverts known CDF values") {
  IntervalDistribution dec = from_preset(DistributionPreset::dec_linear, 100);
  CHECK(sample_interval_at(dec, 0.75) == 50);

  IntervalDistribution uni = from_preset(DistributionPreset::uniform, 100);
  CHECK(sample_interval_at(uni, 0.505) == 51);  // smallest t with t/100 >= 0.505
}

TEST_CASE("sample_interval boundary variates") {
  for (DistributionPreset p : kAllPresets) {
    IntervalDistribution d = from_preset(p, 218);
    INFO(preset_name(p));
    int t_small = sample_interval_at(d, 1e-12);
    CHECK(t_small >= 0);
    CHECK(t_small <= 1);
    CHECK(sample_interval_at(d, 1.0) == 218);
    CHECK(sample_interval_at(d, 0.0) == 0);
  }
}

TEST_CASE("inverse consistency: sample_interval(F(t)) == t for all integer t") {
  for (DistributionPreset p : kAllPresets) {
    IntervalDistribution d = from_preset(p, 218);
    for (int t = 0; t <= 218; ++t) {
      INFO(preset_name(p), " t=", t);
      CHECK(sample_interval_at(d, d.cdf(t)) == t);
    }
  }
}

namespace {

// Exact mean of the integer-valued sampler, E[t] = T - sum_{t<T} F(t)
// (Abel summation of t * (F(t) - F(t-1))).
double discrete_mean(const IntervalDistribution& d) {
  double s = 0.0;
  for (int t = 0; t < d.t_max; ++t) s += d.cdf(t);
  return d.t_max - s;
}

}  // namespace

TEST_CASE("empirical means match the discrete-mean oracle within 0.5%") {
  const int T = 218;
  const int n = 100000;
  for (DistributionPreset p : kAllPresets) {
    IntervalDistribution d = from_preset(p, T);
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(p)));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_interval(d, rng);
    double mean = sum / n;
    INFO(preset_name(p), " empirical=", mean, " exact=", discrete_mean(d));
    CHECK(mean == doctest::Approx(discrete_mean(d)).epsilon(0.005));
    // the sampler sits ~0.5 above the continuous mean (ceil inversion)
    CHECK(discrete_mean(d) == doctest::Approx(quad_mean(d) + 0.5).epsilon(0.004));
  }
}

TEST_CASE("spec presets: empirical means within 1% of T/3, T/2, 2T/3") {
  const int T = 218;
  const int n = 100000;
  const std::pair<DistributionPreset, double> expect[] = {
      {DistributionPreset::dec_linear, T / 3.0},
      {DistributionPreset::uniform, T / 2.0},
      {DistributionPreset::inc_linear, 2.0 * T / 3.0},
  };
  for (auto [p, analytic] : expect) {
    IntervalDistribution d = from_preset(p, T);
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(p)));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_interval(d, rng);
    double mean = sum / n;
    INFO(preset_name(p), " empirical=", mean);
    CHECK(mean == doctest::Approx(analytic).epsilon(0.01));
  }
}

TEST_CASE("analytic means: DecLinear T/3, Uniform T/2, IncLinear 2T/3") {
  const double T = 218.0;
  CHECK(quad_mean(from_preset(DistributionPreset::dec_linear, 218)) ==
        doctest::Approx(T / 3).epsilon(1e-6));
  CHECK(quad_mean(from_preset(DistributionPreset::uniform, 218)) ==
        doctest::Approx(T / 2).epsilon(1e-6));
  CHECK(quad_mean(from_preset(DistributionPreset::inc_linear, 218)) ==
        doctest::Approx(2 * T / 3).epsilon(1e-6));
}

TEST_CASE("sample_clip_pair keeps both clips inside the video") {
  const int video_len = 250, clip_span = 32;
  IntervalDistribution d = from_preset(DistributionPreset::dec_linear, video_len - clip_span);
  CHECK(d.t_max == 218);
  Rng rng(7);
  for (int i = 0; i < 20000; ++i) {
    ClipPairSpec pair = sample_clip_pair(d, video_len, clip_span, rng);
    CHECK(pair.start1 >= 0);
    CHECK(pair.start2 - pair.start1 == pair.interval);
    CHECK(pair.interval >= 0);
    CHECK(pair.start2 + clip_span <= video_len);
  }
}

TEST_CASE("sample_clip_pair with t == t_max forces start1 == 0") {
  // uniform over [0,4]: v=1 always draws t = t_max
  IntervalDistribution d = from_preset(DistributionPreset::uniform, 4);
  CHECK(sample_interval_at(d, 1.0) == 4);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    ClipPairSpec pair = sample_clip_pair(d, 12, 8, rng);
    if (pair.interval == 4) CHECK(pair.start1 == 0);
  }
}

TEST_CASE("sample_clip_pair validates the domain match") {
  IntervalDistribution d = from_preset(DistributionPreset::dec_linear, 100);
  Rng rng(1);
  CHECK_THROWS_AS(sample_clip_pair(d, 250, 32, rng), Error);  // needs t_max 218
}

TEST_CASE("from_preset rejects empty domains") {
  CHECK_THROWS_AS(from_preset(DistributionPreset::uniform, 0), Error);
}

TEST_CASE("preset names round-trip") {
  for (DistributionPreset p : kAllPresets) CHECK(preset_from_name(preset_name(p)) == p);
  CHECK_THROWS_AS(preset_from_name("nope"), Error);
}
