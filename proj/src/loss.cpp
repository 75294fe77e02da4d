#include "cvrl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cvrl/error.hpp"

namespace cvrl {

namespace {

constexpr double kMinNorm = 1e-12;

void validate(const EmbeddingBatch& batch) {
  if (batch.n < 1) throw config_error("embedding batch needs at least one pair");
  if (batch.dim < 2) throw config_error("embedding dimension must be >= 2");
  if (!(batch.tau > 0.0)) throw config_error("temperature must be positive");
  if (batch.rows.size() != static_cast<std::size_t>(2 * batch.n) * batch.dim)
    throw config_error("embedding batch storage does not match 2N x D");
}

struct Normalized {
  int rows = 0;
  int dim = 0;
  std::vector<double> unit;   // 2n * dim
  std::vector<double> norms;  // 2n
  const double* row(int r) const { return unit.data() + static_cast<std::size_t>(r) * dim; }
};

Normalized normalize_rows(const EmbeddingBatch& batch) {
  Normalized nz;
  nz.rows = 2 * batch.n;
  nz.dim = batch.dim;
  nz.unit.resize(batch.rows.size());
  nz.norms.resize(nz.rows);
  for (int r = 0; r < nz.rows; ++r) {
    const double* src = batch.row(r);
    double sq = 0.0;
    for (int d = 0; d < nz.dim; ++d) sq += src[d] * src[d];
    double norm = std::sqrt(sq);
    if (norm <= kMinNorm)
      throw numeric_error("row " + std::to_string(r) + " is numerically zero; cannot normalize");
    nz.norms[r] = norm;
    double inv = 1.0 / norm;
    double* dst = nz.unit.data() + static_cast<std::size_t>(r) * nz.dim;
    for (int d = 0; d < nz.dim; ++d) dst[d] = src[d] * inv;
  }
  return nz;
}

std::vector<double> pairwise_sims(const Normalized& nz) {
  int m = nz.rows;
  std::vector<double> s(static_cast<std::size_t>(m) * m, 0.0);
  for (int r = 0; r < m; ++r) {
    for (int k = r; k < m; ++k) {
      double dot = 0.0;
      const double* a = nz.row(r);
      const double* b = nz.row(k);
      for (int d = 0; d < nz.dim; ++d) dot += a[d] * b[d];
      s[static_cast<std::size_t>(r) * m + k] = dot;
      s[static_cast<std::size_t>(k) * m + r] = dot;
    }
  }
  return s;
}

inline int positive_of(int r, int n) { return (r + n) % (2 * n); }

// Per-anchor cross-entropy term via max-shifted log-sum-exp over k != r.
double anchor_loss(const std::vector<double>& sims, int m, int r, int pos, double tau) {
  const double* row = sims.data() + static_cast<std::size_t>(r) * m;
  double mx = -INFINITY;
  for (int k = 0; k < m; ++k)
    if (k != r) mx = std::max(mx, row[k] / tau);
  double sum = 0.0;
  for (int k = 0; k < m; ++k)
    if (k != r) sum += std::exp(row[k] / tau - mx);
  return -(row[pos] / tau) + mx + std::log(sum);
}

}  // namespace

std::vector<double> l2_normalize(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  double norm = std::sqrt(sq);
  if (norm <= kMinNorm) throw numeric_error("l2_normalize: vector is numerically zero");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

double info_nce_loss(const EmbeddingBatch& batch, LossMode mode) {
  validate(batch);
  Normalized nz = normalize_rows(batch);
  std::vector<double> sims = pairwise_sims(nz);
  int m = nz.rows;
  int anchors = mode == LossMode::one_sided ? batch.n : m;
  double total = 0.0;
  for (int r = 0; r < anchors; ++r)
    total += anchor_loss(sims, m, r, positive_of(r, batch.n), batch.tau);
  return total / anchors;
}

std::vector<double> info_nce_grad(const EmbeddingBatch& batch, LossMode mode) {
  validate(batch);
  Normalized nz = normalize_rows(batch);
  std::vector<double> sims = pairwise_sims(nz);
  int m = nz.rows;
  int dim = nz.dim;
  int anchors = mode == LossMode::one_sided ? batch.n : m;
  double inv_a = 1.0 / anchors;

  // dL/ds[r][k] for anchors r, k != r: (softmax_k - 1[k == pos]) / (tau * anchors)
  std::vector<double> ds(static_cast<std::size_t>(m) * m, 0.0);
  for (int r = 0; r < anchors; ++r) {
    const double* row = sims.data() + static_cast<std::size_t>(r) * m;
    double mx = -INFINITY;
    for (int k = 0; k < m; ++k)
      if (k != r) mx = std::max(mx, row[k] / batch.tau);
    double denom = 0.0;
    for (int k = 0; k < m; ++k)
      if (k != r) denom += std::exp(row[k] / batch.tau - mx);
    int pos = positive_of(r, batch.n);
    for (int k = 0; k < m; ++k) {
      if (k == r) continue;
      double w = std::exp(row[k] / batch.tau - mx) / denom;
      ds[static_cast<std::size_t>(r) * m + k] =
          (w - (k == pos ? 1.0 : 0.0)) / batch.tau * inv_a;
    }
  }

  // grad wrt normalized rows: s[r][k] = u_r . u_k
  std::vector<double> du(static_cast<std::size_t>(m) * dim, 0.0);
  for (int r = 0; r < anchors; ++r) {
    for (int k = 0; k < m; ++k) {
      double g = ds[static_cast<std::size_t>(r) * m + k];
      if (g == 0.0) continue;
      const double* ur = nz.row(r);
      const double* uk = nz.row(k);
      double* dr = du.data() + static_cast<std::size_t>(r) * dim;
      double* dk = du.data() + static_cast<std::size_t>(k) * dim;
      for (int d = 0; d < dim; ++d) {
        dr[d] += g * uk[d];
        dk[d] += g * ur[d];
      }
    }
  }

  // chain through normalization: dz = (du - (du . u) u) / ||z||
  std::vector<double> dz(static_cast<std::size_t>(m) * dim, 0.0);
  for (int r = 0; r < m; ++r) {
    const double* u = nz.row(r);
    const double* g = du.data() + static_cast<std::size_t>(r) * dim;
    double proj = 0.0;
    for (int d = 0; d < dim; ++d) proj += g[d] * u[d];
    double inv_norm = 1.0 / nz.norms[r];
    double* out = dz.data() + static_cast<std::size_t>(r) * dim;
    for (int d = 0; d < dim; ++d) out[d] = (g[d] - proj * u[d]) * inv_norm;
  }
  return dz;
}

std::vector<double> similarity_matrix(const EmbeddingBatch& batch) {
  validate(batch);
  Normalized nz = normalize_rows(batch);
  std::vector<double> sims = pairwise_sims(nz);
  int m = nz.rows;
  for (int r = 0; r < m; ++r) {
    for (int k = 0; k < m; ++k) {
      double& v = sims[static_cast<std::size_t>(r) * m + k];
      v = std::clamp(v, -1.0, 1.0);
    }
    sims[static_cast<std::size_t>(r) * m + r] = 1.0;
  }
  return sims;
}

SimilarityStats similarity_stats(const EmbeddingBatch& batch) {
  std::vector<double> sims = similarity_matrix(batch);
  int m = 2 * batch.n;
  double pos = 0.0, neg = 0.0;
  long neg_count = 0;
  for (int r = 0; r < m; ++r) {
    int p = positive_of(r, batch.n);
    pos += sims[static_cast<std::size_t>(r) * m + p];
    for (int k = 0; k < m; ++k) {
      if (k == r || k == p) continue;
      neg += sims[static_cast<std::size_t>(r) * m + k];
      ++neg_count;
    }
  }
  SimilarityStats st;
  st.positive_mean = pos / m;
  st.negative_mean = neg_count > 0 ? neg / neg_count : 0.0;
  return st;
}

}  // namespace cvrl
