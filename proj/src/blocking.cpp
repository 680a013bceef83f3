#include "rorbk/blocking.hpp"

#include <algorithm>
#include <iostream>

#include "rorbk/kernels.hpp"

namespace rorbk {

BlockPartition::BlockPartition(Index rows, Index block_rows)
    : rows_(rows), block_rows_(block_rows) {
  if (block_rows == 0 || block_rows > rows)
    throw std::invalid_argument("partition_rows: need 1 <= block_rows <= rows (got " +
                                std::to_string(block_rows) + " for " + std::to_string(rows) +
                                " rows)");
  for (Index start = 0; start < rows; start += block_rows)
    ranges_.push_back({start, std::min(start + block_rows, rows)});
}

std::vector<Index> BlockPartition::bounds() const {
  std::vector<Index> out;
  out.reserve(ranges_.size() + 1);
  for (const auto& r : ranges_) out.push_back(r.begin);
  out.push_back(rows_);
  return out;
}

BlockPartition partition_rows(Index rows, Index block_rows) { return {rows, block_rows}; }

CentroidSet compute_centroids(const MatrixHandle& a, const BlockPartition& part) {
  require_dims(part.rows() == a.rows(), "compute_centroids: partition does not cover A");
  CentroidSet out{kernels::omp::block_row_sums(a, part.bounds()), Vector(part.num_blocks())};
  for (Index t = 0; t < part.num_blocks(); ++t) out.norms[t] = norm2(out.centroids.row(t));
  return out;
}

double CosineMatrix::row_sum(Index t) const {
  double s = 0.0;
  for (double v : values.row(t)) s += v;
  return s;
}

CosineMatrix compute_cosine_matrix(const CentroidSet& cents) {
  const Index k = cents.centroids.rows();
  CosineMatrix c{DenseMatrix(k, k)};
  const auto kk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(dynamic) if (k * k * cents.centroids.cols() > kernels::kParallelGrain)
  for (std::ptrdiff_t si = 0; si < kk; ++si) {
    const auto i = static_cast<Index>(si);
    c.values(i, i) = 1.0;
    if (cents.norms[i] == 0.0) continue;
    for (Index j = 0; j < i; ++j) {
      if (cents.norms[j] == 0.0) continue;
      const double cos = std::abs(dot(cents.centroids.row(i), cents.centroids.row(j))) /
                         (cents.norms[i] * cents.norms[j]);
      c.values(i, j) = std::min(cos, 1.0);
    }
  }
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < i; ++j) c.values(j, i) = c.values(i, j);
  return c;
}

namespace {

SamplingDistribution finish(Vector weights, Vector shifted) {
  double total = 0.0;
  for (double w : shifted) total += w;
  const Index k = shifted.size();
  SamplingDistribution d{std::move(weights), Vector(k), Vector(k)};
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::cerr << "warning: block sampling weights degenerate; falling back to uniform\n";
    std::fill(shifted.begin(), shifted.end(), 1.0);
    total = static_cast<double>(k);
  }
  double run = 0.0;
  for (Index t = 0; t < k; ++t) {
    d.probs[t] = shifted[t] / total;
    run += d.probs[t];
    d.cumulative[t] = std::min(run, 1.0);  // rounding may overshoot 1 before the end
  }
  if (k > 0) d.cumulative.back() = 1.0;
  return d;
}

}  // namespace

SamplingDistribution build_sampling_distribution(const CosineMatrix& c) {
  const Index k = c.size();
  require_dims(k > 0, "build_sampling_distribution: empty cosine matrix");
  Vector row_sums(k);
  for (Index t = 0; t < k; ++t) row_sums[t] = c.row_sum(t);
  const double min_sum = *std::min_element(row_sums.begin(), row_sums.end());
  const double half_k = 0.5 * static_cast<double>(k);
  Vector raw(k);
  Vector shifted(k);
  for (Index t = 0; t < k; ++t) {
    raw[t] = std::exp(-half_k * row_sums[t]);
    // Same ratios as raw, but the largest weight is exactly 1 so nothing underflows.
    shifted[t] = std::exp(-half_k * (row_sums[t] - min_sum));
  }
  return finish(std::move(raw), std::move(shifted));
}

SamplingDistribution distribution_from_probs(std::span<const double> probs) {
  for (double p : probs)
    if (!(p >= 0.0)) throw std::invalid_argument("distribution_from_probs: negative probability");
  Vector w(probs.begin(), probs.end());
  return finish(w, w);
}

SamplingDistribution uniform_distribution(Index k) { return distribution_from_probs(Vector(k, 1.0)); }

Index sample_block(const SamplingDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  auto it = std::upper_bound(dist.cumulative.begin(), dist.cumulative.end(), u);
  auto t = static_cast<Index>(it - dist.cumulative.begin());
  return std::min(t, dist.size() - 1);
}

}  // namespace rorbk
