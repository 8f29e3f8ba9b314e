#include "anomnet/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "anomnet/errors.hpp"
#include "anomnet/kernels.hpp"

namespace anomnet {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ArgumentError("euclidean_distance: dimensions " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()) + " differ");
  }
  return kernels::distance(a, b);
}

void LabelingConfig::validate() const {
  if (num_clusters < 1) throw ArgumentError("labeling: num_clusters must be >= 1");
  if (knn_k < 1) throw ArgumentError("labeling: knn_k must be >= 1");
  if (!(pa_score_multiplier > 0)) throw ArgumentError("labeling: pa_score_multiplier must be > 0");
}

namespace {

// Clamped to [min, max] so that rounding never puts the mean of equal values
// above or below them.
double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return std::clamp(sum / static_cast<double>(v.size()), *lo, *hi);
}

double population_std(std::span<const double> v) {
  const double mean = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

Matrix rows_of(const Matrix& points, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), points.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(points.row(rows[i]).begin(), points.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

std::vector<std::size_t> detect_point_anomalies(const Matrix& points, const LabelingConfig& cfg) {
  cfg.validate();
  const auto k = static_cast<std::size_t>(cfg.knn_k);
  if (points.rows() <= k) {
    throw ArgumentError("detect_point_anomalies: need more than knn_k=" + std::to_string(k) +
                        " points, got " + std::to_string(points.rows()));
  }
  const auto scores = kernels::knn_mean_distance(points, k);
  const double threshold = mean_of(scores) + cfg.pa_score_multiplier * population_std(scores);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > threshold) out.push_back(i);
  }
  return out;
}

RadiusTable build_radius_table(const Matrix& pa_points) {
  const std::size_t k = pa_points.rows();
  if (k < 2) {
    throw DegenerateInputError("build_radius_table: need at least 2 point anomalies, got " +
                               std::to_string(k));
  }
  const Matrix dist = kernels::pairwise_distances(pa_points);
  RadiusTable table;
  table.mean_distance.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) sum += dist(i, j);
    }
    table.mean_distance[i] = sum / static_cast<double>(k - 1);
  }
  table.global_radius = mean_of(table.mean_distance);
  return table;
}

std::vector<std::size_t> detect_cpa(const RadiusTable& table) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < table.mean_distance.size(); ++i) {
    if (table.mean_distance[i] < table.global_radius) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

std::vector<std::size_t> ClusterModel::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == cluster) out.push_back(i);
  }
  return out;
}

double kmeans_objective(const Matrix& points, const Matrix& centroids,
                        std::span<const std::size_t> assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double d = kernels::distance(points.row(i), centroids.row(assignment[i]));
    total += d * d;
  }
  return total;
}

namespace {

std::size_t nearest_centroid(std::span<const double> p, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = kernels::distance(p, centroids.row(0));
  for (std::size_t c = 1; c < centroids.rows(); ++c) {
    const double d = kernels::distance(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Matrix initial_centroids(const Matrix& points, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> chosen;
  for (std::size_t idx : order) {
    if (chosen.size() == k) break;
    const bool duplicate = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
      return std::equal(points.row(c).begin(), points.row(c).end(), points.row(idx).begin());
    });
    if (!duplicate) chosen.push_back(idx);
  }
  // Fewer distinct points than k: fill with repeats in shuffled order.
  for (std::size_t i = 0; chosen.size() < k; ++i) chosen.push_back(order[i]);
  return rows_of(points, chosen);
}

// Moves the point farthest from its centroid into every empty cluster.
// Returns true if anything changed.
bool repair_empty_clusters(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& assignment) {
  bool changed = false;
  std::vector<std::size_t> sizes(centroids.rows(), 0);
  for (std::size_t a : assignment) ++sizes[a];
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (sizes[assignment[i]] < 2) continue;
      const double d = kernels::distance(points.row(i), centroids.row(assignment[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.rows()) break;
    --sizes[assignment[far]];
    assignment[far] = c;
    sizes[c] = 1;
    std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(c).begin());
    changed = true;
  }
  return changed;
}

void update_centroids(const Matrix& points, Matrix& centroids, std::span<const std::size_t> assignment) {
  Matrix sums(centroids.rows(), centroids.cols());
  std::vector<std::size_t> counts(centroids.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto dst = sums.row(assignment[i]);
    auto src = points.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < centroids.cols(); ++j) {
      centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
}

}  // namespace

ClusterModel kmeans(const Matrix& points, int k, std::uint64_t seed) {
  if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
  const auto kk = static_cast<std::size_t>(k);
  if (points.rows() < kk) {
    throw ArgumentError("kmeans: " + std::to_string(points.rows()) + " points for k=" + std::to_string(k));
  }

  ClusterModel model;
  model.centroids = initial_centroids(points, kk, seed);
  model.assignment.assign(points.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) model.assignment[i] = nearest_centroid(points.row(i), model.centroids);
  repair_empty_clusters(points, model.centroids, model.assignment);
  model.objective_history.push_back(kmeans_objective(points, model.centroids, model.assignment));

  for (int it = 1; it <= kKmeansMaxIterations; ++it) {
    model.iterations = it;
    update_centroids(points, model.centroids, model.assignment);
    std::vector<std::size_t> next(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) next[i] = nearest_centroid(points.row(i), model.centroids);
    repair_empty_clusters(points, model.centroids, next);
    const bool stable = next == model.assignment;
    model.assignment = std::move(next);
    model.objective_history.push_back(kmeans_objective(points, model.centroids, model.assignment));
    if (stable) break;
  }
  update_centroids(points, model.centroids, model.assignment);
  return model;
}

ClusterModel cluster_density_stats(ClusterModel model, const Matrix& points, int knn_k) {
  if (knn_k < 1) throw ArgumentError("cluster_density_stats: knn_k must be >= 1");
  if (model.assignment.size() != points.rows()) {
    throw ArgumentError("cluster_density_stats: assignment does not match point count");
  }
  model.density_std.assign(model.num_clusters(), 0.0);
  for (std::size_t c = 0; c < model.num_clusters(); ++c) {
    const auto members = model.members(c);
    if (members.size() < 2) continue;
    const auto density = kernels::group_density(points, members, static_cast<std::size_t>(knn_k));
    model.density_std[c] = population_std(density);
  }
  model.density_threshold = model.density_std.empty() ? 0.0 : mean_of(model.density_std);
  return model;
}

std::vector<std::size_t> detect_cna(const ClusterModel& model) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < model.density_std.size(); ++c) {
    if (model.density_std[c] >= model.density_threshold) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines

LabelingResult label_dataset(const Dataset& ds, const LabelingConfig& cfg) {
  cfg.validate();
  if (ds.empty()) throw ArgumentError("label_dataset: empty dataset");
  const Matrix points = ds.feature_matrix();
  const std::size_t n = points.rows();

  LabelingResult result;
  result.labeled = ds;
  result.pa_candidates = detect_point_anomalies(points, cfg);

  std::vector<AnomalyLabel> labels(n, AnomalyLabel::ND);
  std::vector<bool> is_pa(n, false);
  for (std::size_t r : result.pa_candidates) {
    is_pa[r] = true;
    labels[r] = AnomalyLabel::PA;
  }
  if (result.pa_candidates.size() >= 2) {
    const auto table = build_radius_table(rows_of(points, result.pa_candidates));
    for (std::size_t pos : detect_cpa(table)) labels[result.pa_candidates[pos]] = AnomalyLabel::CPA;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!is_pa[i]) result.clustered_rows.push_back(i);
  }
  if (result.clustered_rows.size() < static_cast<std::size_t>(cfg.num_clusters)) {
    throw DegenerateInputError("label_dataset: " + std::to_string(result.clustered_rows.size()) +
                               " non-anomalous points for " + std::to_string(cfg.num_clusters) +
                               " clusters");
  }
  const Matrix clustered = rows_of(points, result.clustered_rows);
  result.clusters = cluster_density_stats(kmeans(clustered, cfg.num_clusters, cfg.seed), clustered, cfg.knn_k);

  std::vector<AnomalyLabel> cluster_label(result.clusters.num_clusters(), AnomalyLabel::ND);
  for (std::size_t c : detect_cna(result.clusters)) cluster_label[c] = AnomalyLabel::CNA;
  for (std::size_t i = 0; i < result.clustered_rows.size(); ++i) {
    labels[result.clustered_rows[i]] = cluster_label[result.clusters.assignment[i]];
  }

  LabelingReport& report = result.report;
  report.points = n;
  report.clusters = result.clusters.num_clusters();
  for (std::size_t c = 0; c < report.clusters; ++c) {
    report.cluster_rows.push_back({result.clusters.members(c).size(), cluster_label[c]});
  }
  for (std::size_t i = 0; i < n; ++i) {
    result.labeled[i].label = labels[i];
    switch (labels[i]) {
      case AnomalyLabel::ND: ++report.nd; break;
      case AnomalyLabel::CNA: ++report.cna; break;
      case AnomalyLabel::CPA: ++report.cpa; break;
      case AnomalyLabel::PA: ++report.pa; break;
    }
  }
  return result;
}

const LabelingConfig& SupervisedConfig::for_class(int class_id) const {
  if (auto it = per_class.find(class_id); it != per_class.end()) return it->second;
  return labeling;
}

SupervisedResult label_supervised(const Dataset& ds, const SupervisedConfig& cfg) {
  if (ds.empty()) throw ArgumentError("label_supervised: empty dataset");
  if (!ds.has_classes()) throw ArgumentError("label_supervised: every sample needs a class id");

  std::vector<std::size_t> retained = cfg.retained;
  if (retained.empty()) {
    retained.resize(ds.dimension());
    std::iota(retained.begin(), retained.end(), 0);
  }

  // Step 1: normalise, then fold the discarded features into the retained ones.
  const auto [normalized, params] = minmax_normalize(ds);
  const std::vector<double> weights = cfg.discarded.empty()
                                          ? std::vector<double>(ds.size(), 0.0)
                                          : compute_sample_weights(normalized, cfg.discarded);
  const Dataset aggregated = aggregate_features(normalized, retained, weights);

  // Step 2: one sub-dataset per class.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < aggregated.size(); ++i) by_class[*aggregated[i].class_id].push_back(i);

  SupervisedResult result;
  result.labeled = aggregated;
  for (const auto& [class_id, rows] : by_class) {
    const LabelingConfig& lcfg = cfg.for_class(class_id);
    const Dataset sub = subset(aggregated, rows);

    // Step 3: label the sub-dataset, falling back to ND when it is too small.
    Dataset labeled;
    LabelingReport report;
    const bool too_small = sub.size() <= static_cast<std::size_t>(lcfg.knn_k) ||
                           sub.size() < static_cast<std::size_t>(lcfg.num_clusters);
    bool degenerate = too_small;
    if (!too_small) {
      try {
        auto r = label_dataset(sub, lcfg);
        labeled = std::move(r.labeled);
        report = std::move(r.report);
      } catch (const DegenerateInputError&) {
        degenerate = true;
      }
    }
    if (degenerate) {
      labeled = sub;
      for (Sample& s : labeled.samples()) s.label = AnomalyLabel::ND;
      report = LabelingReport{};
      report.points = sub.size();
      report.nd = sub.size();
      report.degenerate = true;
    }
    report.name = "class " + std::to_string(class_id);

    // Step 4: re-normalise the weighted sub-dataset.
    const Dataset renormalized = minmax_normalize(labeled).first;

    // Step 5: write back at the original rows.
    for (std::size_t i = 0; i < rows.size(); ++i) {
      result.labeled[rows[i]].features = renormalized[i].features;
      result.labeled[rows[i]].label = renormalized[i].label;
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reports

void write_report_text(std::ostream& out, const LabelingReport& report) {
  constexpr int kCol = 9;
  if (!report.name.empty()) out << report.name << '\n';
  out << std::left << std::setw(10) << "" << std::right;
  for (std::size_t c = 0; c < report.cluster_rows.size(); ++c) {
    out << std::setw(kCol) << ("C" + std::to_string(c + 1));
  }
  out << std::setw(kCol) << "Total" << '\n';

  auto row = [&](const char* name, std::size_t total) {
    out << std::left << std::setw(10) << name << std::right;
    for (std::size_t c = 0; c < report.cluster_rows.size(); ++c) out << std::setw(kCol) << "";
    out << std::setw(kCol) << total << '\n';
  };
  row("#Point", report.points);
  row("#Cluster", report.clusters);

  out << std::left << std::setw(10) << "type" << std::right;
  for (const auto& c : report.cluster_rows) out << std::setw(kCol) << ("#" + std::string(to_string(c.label)));
  out << std::setw(kCol) << "" << '\n';
  out << std::left << std::setw(10) << "size" << std::right;
  for (const auto& c : report.cluster_rows) out << std::setw(kCol) << c.size;
  out << std::setw(kCol) << "" << '\n';

  row("#ND", report.nd);
  row("#CNA", report.cna);
  row("#CPA", report.cpa);
  row("#PA", report.pa);
  if (report.degenerate) out << "(too few samples to label; all ND)\n";
}

void write_report_csv(std::ostream& out, std::span<const LabelingReport> reports) {
  out << "name,#Point,#Cluster,#ND,#CNA,#CPA,#PA\n";
  for (const auto& r : reports) {
    out << r.name << ',' << r.points << ',' << r.clusters << ',' << r.nd << ',' << r.cna << ','
        << r.cpa << ',' << r.pa << '\n';
  }
}

}  // namespace anomnet
