#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvrl/error.hpp"
#include "cvrl/loss.hpp"
#include "cvrl/rng.hpp"

using namespace cvrl;

namespace {

EmbeddingBatch make_batch(int n, int dim, double tau, Rng& rng) {
  EmbeddingBatch b;
  b.n = n;
  b.dim = dim;
  b.tau = tau;
  b.rows.resize(static_cast<std::size_t>(2 * n) * dim);
  for (double& v : b.rows) v = rng.uniform(-1.0, 1.0);
  return b;
}

// Independent oracle: normalize, build the similarity matrix, and sum the
// softmax terms directly, sharing no code with the implementation.
double oracle_loss(const EmbeddingBatch& b, bool symmetric) {
  int m = 2 * b.n;
  std::vector<std::vector<double>> u(m, std::vector<double>(b.dim));
  for (int r = 0; r < m; ++r) {
    double nrm = 0.0;
    for (int d = 0; d < b.dim; ++d) nrm += b.row(r)[d] * b.row(r)[d];
    nrm = std::sqrt(nrm);
    for (int d = 0; d < b.dim; ++d) u[r][d] = b.row(r)[d] / nrm;
  }
  auto sim = [&](int i, int j) {
    double s = 0.0;
    for (int d = 0; d < b.dim; ++d) s += u[i][d] * u[j][d];
    return s;
  };
  int anchors = symmetric ? m : b.n;
  double total = 0.0;
  for (int i = 0; i < anchors; ++i) {
    int pos = (i + b.n) % m;
    // direct summation with the common exp(mx) factored out so tiny
    // temperatures stay finite
    double mx = -1e300;
    for (int k = 0; k < m; ++k)
      if (k != i) mx = std::max(mx, sim(i, k) / b.tau);
    double denom = 0.0;
    for (int k = 0; k < m; ++k)
      if (k != i) denom += std::exp(sim(i, k) / b.tau - mx);
    total += -std::log(std::exp(sim(i, pos) / b.tau - mx) / denom);
  }
  return total / anchors;
}

std::vector<double> central_difference_grad(EmbeddingBatch b, LossMode mode, double h = 1e-5) {
  std::vector<double> g(b.rows.size());
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    double orig = b.rows[i];
    b.rows[i] = orig + h;
    double up = info_nce_loss(b, mode);
    b.rows[i] = orig - h;
    double dn = info_nce_loss(b, mode);
    b.rows[i] = orig;
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max(1.0, std::abs(b[i]));
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("l2_normalize: the 3-4-5 triangle") {
  std::vector<double> v{3.0, 4.0};
  auto u = l2_normalize(v);
  CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2_normalize is idempotent on unit vectors") {
  std::vector<double> v{0.6, 0.8};
  auto u = l2_normalize(l2_normalize(v));
  CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2_normalize rejects the zero vector") {
  std::vector<double> v{0.0, 0.0};
  try {
    l2_normalize(v);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
  }
}

TEST_CASE("N=1 batches have exactly zero loss in both modes") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    EmbeddingBatch b = make_batch(1, 5, 0.3, rng);
    CHECK(info_nce_loss(b, LossMode::one_sided) == 0.0);
    CHECK(info_nce_loss(b, LossMode::symmetric) == 0.0);
  }
}

TEST_CASE("orthonormal N=2 at tau=1 gives -log(e/(e+2))") {
  EmbeddingBatch b;
  b.n = 2;
  b.dim = 2;
  b.tau = 1.0;
  b.rows = {1, 0,   // z1 = e1
            0, 1,   // z2 = e2
            1, 0,   // z1' = e1
            0, 1};  // z2' = e2
  double expect = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  CHECK(expect == doctest::Approx(0.551445).epsilon(2e-5));
  CHECK(info_nce_loss(b, LossMode::one_sided) == doctest::Approx(0.551445).epsilon(1e-5));
  CHECK(info_nce_loss(b, LossMode::symmetric) == doctest::Approx(0.551445).epsilon(1e-5));
  CHECK(info_nce_loss(b, LossMode::symmetric) ==
        doctest::Approx(oracle_loss(b, true)).epsilon(1e-12));
}

TEST_CASE("aligned positives at tiny temperature drive the loss to zero") {
  EmbeddingBatch b;
  b.n = 2;
  b.dim = 3;
  b.tau = 1e-3;
  // positives perfectly aligned, negatives strictly less similar
  b.rows = {1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0};
  double loss = info_nce_loss(b, LossMode::symmetric);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-9);
  CHECK(loss == doctest::Approx(oracle_loss(b, true)).epsilon(1e-9));
}

TEST_CASE("implementation matches the direct-summation oracle on random batches") {
  Rng rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    EmbeddingBatch b = make_batch(static_cast<int>(rng.uniform_int(1, 6)),
                                  static_cast<int>(rng.uniform_int(2, 9)), rng.uniform(0.1, 1.5),
                                  rng);
    CHECK(info_nce_loss(b, LossMode::symmetric) ==
          doctest::Approx(oracle_loss(b, true)).epsilon(1e-10));
    CHECK(info_nce_loss(b, LossMode::one_sided) ==
          doctest::Approx(oracle_loss(b, false)).epsilon(1e-10));
  }
}

TEST_CASE("temperature must be positive") {
  Rng rng(3);
  EmbeddingBatch b = make_batch(2, 3, 0.5, rng);
  b.tau = 0.0;
  CHECK_THROWS_AS(info_nce_loss(b), Error);
  b.tau = -1.0;
  CHECK_THROWS_AS(info_nce_grad(b), Error);
}

TEST_CASE("gradient: N=1 is identically zero") {
  Rng rng(15);
  EmbeddingBatch b = make_batch(1, 4, 0.2, rng);
  for (LossMode mode : {LossMode::one_sided, LossMode::symmetric}) {
    auto g = info_nce_grad(b, mode);
    for (double v : g) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(100);
  for (int n : {2, 4}) {
    for (int dim : {3, 8}) {
      for (double tau : {0.1, 0.5}) {
        EmbeddingBatch b = make_batch(n, dim, tau, rng);
        for (LossMode mode : {LossMode::one_sided, LossMode::symmetric}) {
          auto analytic = info_nce_grad(b, mode);
          auto numeric = central_difference_grad(b, mode);
          INFO("n=", n, " dim=", dim, " tau=", tau);
          CHECK(max_rel_error(analytic, numeric) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("scale invariance: scaling a row leaves the loss unchanged") {
  Rng rng(200);
  EmbeddingBatch b = make_batch(3, 5, 0.4, rng);
  double base = info_nce_loss(b);
  EmbeddingBatch scaled = b;
  for (int d = 0; d < b.dim; ++d) scaled.row(2)[d] *= 2.0;
  CHECK(info_nce_loss(scaled) == doctest::Approx(base).epsilon(1e-9));

  // consequence: the gradient of a row is orthogonal to that row
  auto g = info_nce_grad(b);
  for (int r = 0; r < 2 * b.n; ++r) {
    double dot = 0.0, gn = 0.0, zn = 0.0;
    for (int d = 0; d < b.dim; ++d) {
      dot += g[static_cast<std::size_t>(r) * b.dim + d] * b.row(r)[d];
      gn += g[static_cast<std::size_t>(r) * b.dim + d] * g[static_cast<std::size_t>(r) * b.dim + d];
      zn += b.row(r)[d] * b.row(r)[d];
    }
    CHECK(std::abs(dot) <= 1e-9 * std::max(1.0, std::sqrt(gn * zn)));
  }
}

TEST_CASE("permutation equivariance: swapping pairs permutes per-anchor losses") {
  Rng rng(300);
  EmbeddingBatch b = make_batch(4, 6, 0.3, rng);
  double base = info_nce_loss(b);

  // swap pairs 1 and 2 in both views
  EmbeddingBatch p = b;
  for (int d = 0; d < b.dim; ++d) {
    std::swap(p.row(1)[d], p.row(2)[d]);
    std::swap(p.row(1 + 4)[d], p.row(2 + 4)[d]);
  }
  CHECK(info_nce_loss(p) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("monotonicity: raising the positive similarity lowers the anchor loss") {
  // direct-summation oracle over a controlled similarity matrix
  const double tau = 0.5;
  auto anchor_term = [&](double pos_sim) {
    double denom = std::exp(pos_sim / tau) + std::exp(0.1 / tau) + std::exp(-0.2 / tau);
    return -std::log(std::exp(pos_sim / tau) / denom);
  };
  double prev = anchor_term(0.0);
  for (double s = 0.1; s <= 1.0; s += 0.1) {
    double cur = anchor_term(s);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("similarity matrix: identical rows give all ones") {
  EmbeddingBatch b;
  b.n = 2;
  b.dim = 3;
  b.tau = 1.0;
  b.rows = {2, 0, 0, 2, 0, 0, 2, 0, 0, 2, 0, 0};
  auto s = similarity_matrix(b);
  for (double v : s) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("similarity matrix: orthonormal rows give the identity") {
  EmbeddingBatch b;
  b.n = 2;
  b.dim = 4;
  b.tau = 1.0;
  b.rows = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  auto s = similarity_matrix(b);
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k)
      CHECK(s[static_cast<std::size_t>(r) * 4 + k] == doctest::Approx(r == k ? 1.0 : 0.0));
}

TEST_CASE("similarity entries are bounded by Cauchy-Schwarz") {
  Rng rng(400);
  for (int rep = 0; rep < 50; ++rep) {
    EmbeddingBatch b = make_batch(3, 4, 1.0, rng);
    auto s = similarity_matrix(b);
    int m = 2 * b.n;
    for (int r = 0; r < m; ++r) {
      CHECK(s[static_cast<std::size_t>(r) * m + r] == 1.0);
      for (int k = 0; k < m; ++k) {
        CHECK(s[static_cast<std::size_t>(r) * m + k] <= 1.0);
        CHECK(s[static_cast<std::size_t>(r) * m + k] >= -1.0);
        CHECK(s[static_cast<std::size_t>(r) * m + k] ==
              doctest::Approx(s[static_cast<std::size_t>(k) * m + r]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("similarity stats separate positive and negative means") {
  EmbeddingBatch b;
  b.n = 2;
  b.dim = 2;
  b.tau = 1.0;
  b.rows = {1, 0, 0, 1, 1, 0, 0, 1};
  SimilarityStats st = similarity_stats(b);
  CHECK(st.positive_mean == doctest::Approx(1.0));
  CHECK(st.negative_mean == doctest::Approx(0.0));
}
