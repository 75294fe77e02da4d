#pragma once

#include <span>
#include <vector>

namespace cvrl {

// 2N unnormalized embedding rows with the fixed positive-pairing layout:
// rows [0, N) are first views, rows [N, 2N) second views; the positive of
// row r is row (r + N) mod 2N. Normalization happens inside the loss.
struct EmbeddingBatch {
  int n = 0;    // number of pairs; the matrix has 2n rows
  int dim = 0;
  double tau = 0.1;
  std::vector<double> rows;  // 2n * dim, row-major

  double* row(int r) { return rows.data() + static_cast<std::size_t>(r) * dim; }
  const double* row(int r) const { return rows.data() + static_cast<std::size_t>(r) * dim; }
};

enum class LossMode {
  one_sided,  // anchors are the first N rows only
  symmetric,  // anchors are all 2N rows (default)
};

std::vector<double> l2_normalize(std::span<const double> v);

// Temperature-scaled contrastive loss over the batch; the denominator for
// anchor r sums exp(sim(z_r, z_k)/tau) over all k != r in the 2N rows.
double info_nce_loss(const EmbeddingBatch& batch, LossMode mode = LossMode::symmetric);

// Exact gradient with respect to the *unnormalized* rows, chained through
// the l2 normalization. Returns a 2n x dim row-major matrix.
std::vector<double> info_nce_grad(const EmbeddingBatch& batch, LossMode mode = LossMode::symmetric);

// Cosine similarities of the normalized rows: symmetric, unit diagonal,
// entries clamped into [-1, 1].
std::vector<double> similarity_matrix(const EmbeddingBatch& batch);

// Mean positive-pair and mean negative-pair similarity, for training metrics.
struct SimilarityStats {
  double positive_mean = 0.0;
  double negative_mean = 0.0;
};
SimilarityStats similarity_stats(const EmbeddingBatch& batch);

}  // namespace cvrl
