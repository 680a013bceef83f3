#pragma once

#include <span>
#include <vector>

#include "rorbk/matrix.hpp"
#include "rorbk/rng.hpp"

namespace rorbk {

struct BlockRange {
  Index begin = 0;
  Index end = 0;
  Index size() const noexcept { return end - begin; }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

/// Contiguous row blocks of nominal size block_rows; only the last may be short.
class BlockPartition {
 public:
  BlockPartition(Index rows, Index block_rows);

  Index rows() const noexcept { return rows_; }
  Index block_rows() const noexcept { return block_rows_; }
  Index num_blocks() const noexcept { return ranges_.size(); }
  std::span<const BlockRange> ranges() const noexcept { return ranges_; }
  const BlockRange& operator[](Index t) const { return ranges_[t]; }
  /// k+1 boundaries: block t is [bounds[t], bounds[t+1]).
  std::vector<Index> bounds() const;

  RowBlock block(const MatrixHandle& a, Index t) const {
    return RowBlock::contiguous(a, ranges_[t].begin, ranges_[t].end);
  }

 private:
  Index rows_;
  Index block_rows_;
  std::vector<BlockRange> ranges_;
};

/// Throws std::invalid_argument unless 1 <= block_rows <= rows.
BlockPartition partition_rows(Index rows, Index block_rows);

/// Per-block row sums (unnormalized centroids) and their 2-norms.
struct CentroidSet {
  DenseMatrix centroids;  // k x n
  Vector norms;           // k
};

CentroidSet compute_centroids(const MatrixHandle& a, const BlockPartition& part);

/// C(i,j) = |<c_i, c_j>| / (|c_i| |c_j|). A zero centroid gets C(i,i) = 1 and
/// zeros elsewhere in its row and column.
struct CosineMatrix {
  DenseMatrix values;  // k x k, symmetric
  Index size() const noexcept { return values.rows(); }
  double operator()(Index i, Index j) const { return values(i, j); }
  double row_sum(Index t) const;
};

CosineMatrix compute_cosine_matrix(const CentroidSet& cents);

/// Block sampling distribution P_t proportional to exp(-k * sum_j C(t,j) / 2).
struct SamplingDistribution {
  Vector weights;     // raw exp(-k*rowsum/2); may underflow for large k
  Vector probs;       // normalized
  Vector cumulative;  // prefix sums of probs, last entry exactly 1
  Index size() const noexcept { return probs.size(); }
};

SamplingDistribution build_sampling_distribution(const CosineMatrix& c);
/// Distribution from explicit probabilities (normalized internally).
SamplingDistribution distribution_from_probs(std::span<const double> probs);
SamplingDistribution uniform_distribution(Index k);

/// Inverse-CDF draw by bisection on the cumulative array.
Index sample_block(const SamplingDistribution& dist, Rng& rng);

}  // namespace rorbk
