#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "anomnet/data.hpp"
#include "anomnet/matrix.hpp"

namespace anomnet {

double euclidean_distance(std::span<const double> a, std::span<const double> b);

struct LabelingConfig {
  int num_clusters = 5;
  int knn_k = 5;
  /// Point anomalies score above mean + multiplier * std of all kNN scores.
  double pa_score_multiplier = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// kNN mean-distance outlier scoring. Returns ascending row indices of the
/// points whose score strictly exceeds mean + c * std (population std).
std::vector<std::size_t> detect_point_anomalies(const Matrix& points, const LabelingConfig& cfg);

struct RadiusTable {
  /// Mean distance from each point anomaly to the other point anomalies.
  std::vector<double> mean_distance;
  /// Mean of `mean_distance`; the neighbourhood radius of the whole PA set.
  double global_radius = 0.0;
};

/// Requires at least two points; throws DegenerateInputError otherwise.
RadiusTable build_radius_table(const Matrix& pa_points);

/// Positions (into the radius table) whose radius is strictly below the global radius.
std::vector<std::size_t> detect_cpa(const RadiusTable& table);

struct ClusterModel {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> density_std;
  double density_threshold = 0.0;
  /// Clustering objective after each assignment step.
  std::vector<double> objective_history;
  int iterations = 0;

  std::size_t num_clusters() const { return centroids.rows(); }
  std::vector<std::size_t> members(std::size_t cluster) const;
};

inline constexpr int kKmeansMaxIterations = 300;

/// Lloyd's algorithm from seeded distinct-point initialisation.
ClusterModel kmeans(const Matrix& points, int k, std::uint64_t seed);

/// Sum of squared distances from each point to its assigned centroid.
double kmeans_objective(const Matrix& points, const Matrix& centroids,
                        std::span<const std::size_t> assignment);

/// Fills density_std (population std of per-point density per cluster) and
/// density_threshold (mean of the per-cluster stds).
ClusterModel cluster_density_stats(ClusterModel model, const Matrix& points, int knn_k);

/// Clusters whose density std is at or above the threshold.
std::vector<std::size_t> detect_cna(const ClusterModel& model);

struct ClusterSummary {
  std::size_t size = 0;
  AnomalyLabel label = AnomalyLabel::ND;
};

struct LabelingReport {
  std::string name;
  std::size_t points = 0;
  std::size_t clusters = 0;
  std::size_t nd = 0;
  std::size_t cna = 0;
  std::size_t cpa = 0;
  std::size_t pa = 0;
  std::vector<ClusterSummary> cluster_rows;
  /// Set when the (sub-)dataset was too small to label and got ND throughout.
  bool degenerate = false;

  std::size_t total_labeled() const { return nd + cna + cpa + pa; }
};

struct LabelingResult {
  Dataset labeled;
  LabelingReport report;
  /// Rows flagged by the point-anomaly detector (PA and CPA together).
  std::vector<std::size_t> pa_candidates;
  /// Rows that went into clustering.
  std::vector<std::size_t> clustered_rows;
  ClusterModel clusters;
};

/// Point anomalies, then CPA among them, then k-means on the remainder with
/// CNA/ND by cluster density spread.
LabelingResult label_dataset(const Dataset& ds, const LabelingConfig& cfg);

struct SupervisedConfig {
  /// Main features kept after aggregation (indices into the input features).
  std::vector<std::size_t> retained;
  /// Features folded into the per-sample weight. Empty skips weighting.
  std::vector<std::size_t> discarded;
  LabelingConfig labeling;
  /// Per-class overrides keyed by class id.
  std::map<int, LabelingConfig> per_class;

  const LabelingConfig& for_class(int class_id) const;
};

struct SupervisedResult {
  Dataset labeled;
  std::vector<LabelingReport> reports;
};

/// Weight/aggregate features, split by class, label each class on its own,
/// re-normalise each class, and merge back in the original row order.
SupervisedResult label_supervised(const Dataset& ds, const SupervisedConfig& cfg);

/// Aligned text table: one column per cluster, then the totals column.
void write_report_text(std::ostream& out, const LabelingReport& report);
/// Header "name,#Point,#Cluster,#ND,#CNA,#CPA,#PA" plus one row per report.
void write_report_csv(std::ostream& out, std::span<const LabelingReport> reports);

}  // namespace anomnet
