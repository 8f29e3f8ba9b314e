#pragma once

// Point-wise distance kernels. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels`; the parallel versions
// only split the outer loop over points, so each output element is computed by
// exactly the same instruction sequence and results are bit-identical.

#include <cstddef>
#include <span>
#include <vector>

#include "anomnet/matrix.hpp"

namespace anomnet::kernels {

/// Euclidean distance without bounds checks; callers guarantee equal sizes.
double distance(std::span<const double> a, std::span<const double> b);

/// For every point, the mean distance to its `k` nearest other points.
/// Requires points.rows() > k.
std::vector<double> knn_mean_distance(const Matrix& points, std::size_t k);

/// Full symmetric distance table.
Matrix pairwise_distances(const Matrix& points);

/// Density of each point within its group: 1 / mean distance to the
/// min(k, group_size - 1) nearest members of the same group, capped at
/// `kDensityCap` when that mean falls below `kMinMeanDistance`. Points in
/// singleton groups get density 0.
std::vector<double> group_density(const Matrix& points, std::span<const std::size_t> group,
                                  std::size_t k);

inline constexpr double kDensityCap = 1e12;
inline constexpr double kMinMeanDistance = 1e-12;

namespace serial {

std::vector<double> knn_mean_distance(const Matrix& points, std::size_t k);
Matrix pairwise_distances(const Matrix& points);
std::vector<double> group_density(const Matrix& points, std::span<const std::size_t> group,
                                  std::size_t k);

}  // namespace serial

}  // namespace anomnet::kernels
