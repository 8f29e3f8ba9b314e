#include "anomnet/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "anomnet/errors.hpp"

namespace anomnet::kernels {

double distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace {

// Mean of the k smallest entries of `dists`. Partially sorts in place.
double mean_of_smallest(std::vector<double>& dists, std::size_t k) {
  std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k), dists.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += dists[j];
  return sum / static_cast<double>(k);
}

double knn_score_of(const Matrix& points, std::size_t i, std::size_t k,
                    std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t j = 0; j < points.rows(); ++j) {
    if (j != i) scratch.push_back(distance(points.row(i), points.row(j)));
  }
  return mean_of_smallest(scratch, k);
}

double density_of(const Matrix& points, std::span<const std::size_t> group, std::size_t member,
                  std::size_t k, std::vector<double>& scratch) {
  if (group.size() < 2) return 0.0;
  const std::size_t neighbours = std::min(k, group.size() - 1);
  scratch.clear();
  for (std::size_t other : group) {
    if (other != group[member]) scratch.push_back(distance(points.row(group[member]), points.row(other)));
  }
  const double mean = mean_of_smallest(scratch, neighbours);
  return mean < kMinMeanDistance ? kDensityCap : 1.0 / mean;
}

void check_knn(const Matrix& points, std::size_t k) {
  if (k == 0) throw ArgumentError("knn_mean_distance: k must be at least 1");
  if (points.rows() <= k) {
    throw ArgumentError("knn_mean_distance: need more than " + std::to_string(k) + " points, got " +
                        std::to_string(points.rows()));
  }
}

}  // namespace

std::vector<double> knn_mean_distance(const Matrix& points, std::size_t k) {
  check_knn(points, k);
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  std::vector<double> scores(points.rows());
#pragma omp parallel
  {
    std::vector<double> scratch;
    scratch.reserve(points.rows());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = knn_score_of(points, static_cast<std::size_t>(i), k, scratch);
    }
  }
  return scores;
}

Matrix pairwise_distances(const Matrix& points) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  Matrix out(points.rows(), points.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          distance(points.row(static_cast<std::size_t>(i)), points.row(static_cast<std::size_t>(j)));
    }
  }
  return out;
}

std::vector<double> group_density(const Matrix& points, std::span<const std::size_t> group,
                                  std::size_t k) {
  const auto m = static_cast<std::ptrdiff_t>(group.size());
  std::vector<double> out(group.size());
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
      out[static_cast<std::size_t>(i)] = density_of(points, group, static_cast<std::size_t>(i), k, scratch);
    }
  }
  return out;
}

namespace serial {

std::vector<double> knn_mean_distance(const Matrix& points, std::size_t k) {
  check_knn(points, k);
  std::vector<double> scores(points.rows());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < points.rows(); ++i) scores[i] = knn_score_of(points, i, k, scratch);
  return scores;
}

Matrix pairwise_distances(const Matrix& points) {
  Matrix out(points.rows(), points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t j = 0; j < points.rows(); ++j) out(i, j) = distance(points.row(i), points.row(j));
  }
  return out;
}

std::vector<double> group_density(const Matrix& points, std::span<const std::size_t> group,
                                  std::size_t k) {
  std::vector<double> out(group.size());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < group.size(); ++i) out[i] = density_of(points, group, i, k, scratch);
  return out;
}

}  // namespace serial

}  // namespace anomnet::kernels
