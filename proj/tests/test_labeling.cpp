#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "anomnet/errors.hpp"
#include "anomnet/labeling.hpp"

namespace anomnet {
namespace {

Matrix points(std::initializer_list<std::vector<double>> rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

TEST(Distance, Examples) {
  const std::vector<double> o{0, 0}, p{3, 4}, a{1, 1, 1}, b{2, 2, 2};
  EXPECT_EQ(euclidean_distance(o, p), 5.0);
  EXPECT_EQ(euclidean_distance(p, p), 0.0);
  EXPECT_NEAR(euclidean_distance(a, b), std::sqrt(3.0), 1e-15);
  EXPECT_THROW(euclidean_distance(o, a), ArgumentError);
}

TEST(PointAnomalies, FarPointInTightBlobIsTheOnlyOne) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.1);
  Matrix m;
  for (int i = 0; i < 50; ++i) m.append_row(std::vector<double>{g(rng), g(rng)});
  m.append_row(std::vector<double>{100.0, 0.0});
  EXPECT_EQ(detect_point_anomalies(m, {}), std::vector<std::size_t>{50});
}

TEST(PointAnomalies, UniformGridWithLargeMultiplierIsEmpty) {
  Matrix m;
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) m.append_row(std::vector<double>{double(x), double(y)});
  LabelingConfig cfg;
  cfg.pa_score_multiplier = 10.0;
  EXPECT_TRUE(detect_point_anomalies(m, cfg).empty());
}

TEST(PointAnomalies, PermutationInvariant) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m;
  for (int i = 0; i < 60; ++i) m.append_row(std::vector<double>{g(rng), g(rng) * 3.0});
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled;
  for (std::size_t p : perm) shuffled.append_row(m.row(p));

  std::set<std::size_t> original, mapped;
  for (std::size_t r : detect_point_anomalies(m, {})) original.insert(r);
  for (std::size_t r : detect_point_anomalies(shuffled, {})) mapped.insert(perm[r]);
  EXPECT_FALSE(original.empty());
  EXPECT_EQ(original, mapped);
}

TEST(Radius, CollinearByHand) {
  const auto t = build_radius_table(points({{0, 0}, {1, 0}, {2, 0}}));
  EXPECT_EQ(t.mean_distance, (std::vector<double>{1.5, 1.0, 1.5}));
  EXPECT_NEAR(t.global_radius, 4.0 / 3.0, 1e-15);
  EXPECT_EQ(detect_cpa(t), std::vector<std::size_t>{1});
}

TEST(Radius, SymmetricPair) {
  const auto t = build_radius_table(points({{0, 0}, {0, 2}}));
  EXPECT_EQ(t.mean_distance, (std::vector<double>{2.0, 2.0}));
  EXPECT_EQ(t.global_radius, 2.0);
  EXPECT_TRUE(detect_cpa(t).empty());
}

TEST(Radius, CoincidentPoints) {
  const auto t = build_radius_table(points({{1, 1}, {1, 1}, {1, 1}}));
  EXPECT_EQ(t.mean_distance, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(t.global_radius, 0.0);
}

TEST(Radius, SinglePointIsDegenerate) {
  EXPECT_THROW(build_radius_table(points({{1, 1}})), DegenerateInputError);
}

TEST(Cpa, StrictComparison) {
  EXPECT_EQ(detect_cpa({{1.0, 100.0}, 50.5}), std::vector<std::size_t>{0});
  EXPECT_TRUE(detect_cpa({{0.1, 0.1, 0.1}, 0.1}).empty());
  // Equal radii must give no CPA even when the mean is computed from them.
  const auto t = build_radius_table(points({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_TRUE(detect_cpa(t).empty());
}

TEST(Kmeans, TwoSeparatedPairs) {
  const Matrix m = points({{0, 0}, {0, 1}, {10, 10}, {10, 11}});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto model = kmeans(m, 2, seed);
    EXPECT_EQ(model.assignment[0], model.assignment[1]);
    EXPECT_EQ(model.assignment[2], model.assignment[3]);
    EXPECT_NE(model.assignment[0], model.assignment[2]);
    const std::size_t a = model.assignment[0];
    EXPECT_EQ(model.centroids(a, 1), 0.5);
    EXPECT_EQ(model.centroids(1 - a, 1), 10.5);
    EXPECT_EQ(kmeans_objective(m, model.centroids, model.assignment), 1.0);
  }
}

TEST(Kmeans, SingleClusterIsTheMean) {
  const auto model = kmeans(points({{1, 2}, {3, 4}, {5, 9}}), 1, 1);
  EXPECT_EQ(model.centroids(0, 0), 3.0);
  EXPECT_EQ(model.centroids(0, 1), 5.0);
}

TEST(Kmeans, EveryPointItsOwnCluster) {
  const Matrix m = points({{1, 2}, {3, 4}, {5, 9}, {0, 0}});
  const auto model = kmeans(m, 4, 3);
  EXPECT_EQ(kmeans_objective(m, model.centroids, model.assignment), 0.0);
  EXPECT_EQ(std::set<std::size_t>(model.assignment.begin(), model.assignment.end()).size(), 4u);
}

TEST(Kmeans, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Matrix m;
  for (int i = 0; i < 120; ++i) m.append_row(std::vector<double>{u(rng), u(rng)});
  const auto model = kmeans(m, 5, 4);
  for (std::size_t i = 1; i < model.objective_history.size(); ++i) {
    EXPECT_LE(model.objective_history[i], model.objective_history[i - 1] + 1e-9);
  }
  EXPECT_LE(model.iterations, kKmeansMaxIterations);
}

TEST(Kmeans, TooFewPoints) { EXPECT_THROW(kmeans(points({{0, 0}}), 2, 1), ArgumentError); }

ClusterModel two_clusters(const Matrix& m, std::size_t split) {
  ClusterModel model;
  model.centroids = Matrix(2, m.cols());
  model.assignment.assign(m.rows(), 0);
  for (std::size_t i = split; i < m.rows(); ++i) model.assignment[i] = 1;
  return model;
}

TEST(Density, RegularPolygonHasZeroSpread) {
  Matrix m;
  for (int i = 0; i < 4; ++i) m.append_row(std::vector<double>{double(i % 2), double(i / 2)});  // unit square
  ClusterModel model;
  model.centroids = Matrix(1, 2);
  model.assignment.assign(4, 0);
  const auto stats = cluster_density_stats(model, m, 5);
  EXPECT_EQ(stats.density_std, std::vector<double>{0.0});
  EXPECT_EQ(detect_cna(stats), std::vector<std::size_t>{0});
}

TEST(Density, SingletonClusterHasZeroSpread) {
  const Matrix m = points({{0, 0}, {1, 0}, {5, 5}});
  const auto stats = cluster_density_stats(two_clusters(m, 2), m, 5);
  EXPECT_EQ(stats.density_std[1], 0.0);
}

TEST(Density, ThresholdIsMeanOfSpreads) {
  // Cluster 0 evenly spaced, cluster 1 uneven: spreads computed by hand below.
  const Matrix m = points({{0, 0}, {1, 0}, {2, 0}, {10, 0}, {11, 0}, {13, 0}});
  const auto stats = cluster_density_stats(two_clusters(m, 3), m, 1);
  // k=1 densities: cluster 0 -> 1,1,1; cluster 1 -> 1,1,1/2.
  EXPECT_EQ(stats.density_std[0], 0.0);
  const double mean = 2.5 / 3.0;
  const double expected = std::sqrt((2 * (1 - mean) * (1 - mean) + (0.5 - mean) * (0.5 - mean)) / 3.0);
  EXPECT_NEAR(stats.density_std[1], expected, 1e-15);
  EXPECT_NEAR(stats.density_threshold, expected / 2.0, 1e-15);
  EXPECT_EQ(detect_cna(stats), std::vector<std::size_t>{1});
}

TEST(Cna, ThresholdComparison) {
  ClusterModel model;
  model.density_std = {0.1, 0.3};
  model.density_threshold = 0.2;
  EXPECT_EQ(detect_cna(model), std::vector<std::size_t>{1});
}

TEST(Cna, IdenticalSpreadsAreAllCna) {
  // Three congruent irregular clusters with integer coordinates: identical spreads.
  Matrix m;
  for (double off : {0.0, 100.0, 200.0}) {
    for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}, {3.0, 7.0}}) {
      m.append_row(std::vector<double>{x + off, y});
    }
  }
  ClusterModel model;
  model.centroids = Matrix(3, 2);
  for (std::size_t i = 0; i < 12; ++i) model.assignment.push_back(i / 4);
  const auto stats = cluster_density_stats(model, m, 2);
  EXPECT_GT(stats.density_std[0], 0.0);
  EXPECT_EQ(detect_cna(stats), (std::vector<std::size_t>{0, 1, 2}));
}

Dataset to_dataset(const Matrix& m) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m.cols(); ++j) names.push_back("x" + std::to_string(j));
  Dataset ds(names);
  for (std::size_t i = 0; i < m.rows(); ++i) ds.add({m.row(i).begin(), m.row(i).end()});
  return ds;
}

TEST(Pipeline, DefaultSyntheticShowsAllFourLabels) {
  const auto [ds, params] = minmax_normalize(generate_synthetic(five_blob_spec(), 1));
  const auto result = label_dataset(ds, {});
  const auto& r = result.report;
  EXPECT_EQ(r.points, 195u);
  EXPECT_EQ(r.clusters, 5u);
  EXPECT_GT(r.nd, 0u);
  EXPECT_GT(r.cna, 0u);
  EXPECT_GT(r.cpa, 0u);
  EXPECT_GT(r.pa, 0u);
  EXPECT_EQ(r.total_labeled(), r.points);
}

TEST(Pipeline, PartitionLaw) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto result = label_dataset(generate_synthetic(five_blob_spec(), seed), {});
    std::set<std::size_t> candidates(result.pa_candidates.begin(), result.pa_candidates.end());
    std::set<std::size_t> clustered(result.clustered_rows.begin(), result.clustered_rows.end());
    EXPECT_EQ(candidates.size() + clustered.size(), result.labeled.size());
    for (std::size_t i = 0; i < result.labeled.size(); ++i) {
      const auto label = *result.labeled[i].label;
      const bool anomalous = label == AnomalyLabel::PA || label == AnomalyLabel::CPA;
      EXPECT_EQ(anomalous, candidates.count(i) == 1);
      EXPECT_EQ(!anomalous, clustered.count(i) == 1);
    }
  }
}

TEST(Pipeline, NoPointAnomaliesMeansNoPaOrCpa) {
  Matrix m;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) m.append_row(std::vector<double>{double(x), double(y)});
  LabelingConfig cfg;
  cfg.pa_score_multiplier = 10.0;
  const auto r = label_dataset(to_dataset(m), cfg).report;
  EXPECT_EQ(r.pa, 0u);
  EXPECT_EQ(r.cpa, 0u);
  EXPECT_EQ(r.nd + r.cna, 36u);
}

TEST(Pipeline, TooFewPointsForClusters) {
  LabelingConfig cfg;
  cfg.num_clusters = 10;
  EXPECT_THROW(label_dataset(to_dataset(points({{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}})), cfg),
               DegenerateInputError);
}

TEST(Pipeline, TranslationInvariant) {
  // Power-of-two translation is exact in binary, so distances are unchanged.
  const Dataset ds = generate_synthetic(five_blob_spec(), 3);
  Dataset moved = ds;
  for (auto& s : moved.samples()) {
    s.features[0] += 64.0;
    s.features[1] -= 32.0;
  }
  const auto a = label_dataset(ds, {});
  const auto b = label_dataset(moved, {});
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(a.labeled[i].label, b.labeled[i].label);
}

TEST(Pipeline, LabelsSurviveCsvRoundTrip) {
  const auto result = label_dataset(generate_synthetic(five_blob_spec(), 2), {});
  std::stringstream io;
  write_csv(io, result.labeled);
  const Dataset back = read_csv(io);
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].label, result.labeled[i].label);
  // Relabeling the reloaded features gives the same labels.
  const auto again = label_dataset(back, {});
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(again.labeled[i].label, result.labeled[i].label);
}

Dataset iris_like(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double centers[3][4] = {{5.0, 3.4, 1.5, 0.2}, {5.9, 2.8, 4.3, 1.3}, {6.6, 3.0, 5.5, 2.0}};
  const double spread[3][4] = {{0.35, 0.38, 0.17, 0.1}, {0.5, 0.31, 0.47, 0.2}, {0.63, 0.32, 0.55, 0.27}};
  Dataset ds({"sepal_length", "sepal_width", "petal_length", "petal_width"}, 3);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 50; ++i) {
      std::vector<double> f(4);
      for (int j = 0; j < 4; ++j) f[j] = std::normal_distribution<double>(centers[c][j], spread[c][j])(rng);
      ds.add(f, c);
    }
  }
  return ds;
}

TEST(Supervised, ThreeClassesGiveThreeReportsOfFifty) {
  const Dataset ds = iris_like(1);
  SupervisedConfig cfg;
  cfg.retained = {0, 1};
  cfg.discarded = {2, 3};
  cfg.labeling.num_clusters = 3;
  const auto result = label_supervised(ds, cfg);
  ASSERT_EQ(result.reports.size(), 3u);
  std::size_t total = 0;
  for (const auto& r : result.reports) {
    EXPECT_EQ(r.points, 50u);
    EXPECT_EQ(r.total_labeled(), 50u);
    total += r.points;
  }
  EXPECT_EQ(total, ds.size());
  EXPECT_EQ(result.reports[0].name, "class 0");
  ASSERT_EQ(result.labeled.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(result.labeled[i].class_id, ds[i].class_id);
    EXPECT_TRUE(result.labeled[i].label.has_value());
  }
}

TEST(Supervised, PerClassOverrideApplies) {
  SupervisedConfig cfg;
  cfg.labeling.num_clusters = 3;
  cfg.per_class[1].num_clusters = 2;
  const auto result = label_supervised(iris_like(2), cfg);
  EXPECT_EQ(result.reports[0].clusters, 3u);
  EXPECT_EQ(result.reports[1].clusters, 2u);
}

TEST(Supervised, SingleClassMatchesUnsupervisedAfterPreamble) {
  Dataset ds = generate_synthetic(five_blob_spec(), 4);
  for (auto& s : ds.samples()) s.class_id = 0;
  ds.set_num_classes(1);
  SupervisedConfig cfg;
  const auto supervised = label_supervised(ds, cfg);
  ASSERT_EQ(supervised.reports.size(), 1u);
  const auto [normalized, params] = minmax_normalize(ds);
  const auto plain = label_dataset(normalized, cfg.labeling);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(supervised.labeled[i].label, plain.labeled[i].label);
}

TEST(Report, CsvLayout) {
  LabelingReport r;
  r.name = "dataset";
  r.points = 10;
  r.clusters = 2;
  r.nd = 4;
  r.cna = 3;
  r.cpa = 2;
  r.pa = 1;
  std::ostringstream out;
  write_report_csv(out, std::span<const LabelingReport>(&r, 1));
  EXPECT_EQ(out.str(), "name,#Point,#Cluster,#ND,#CNA,#CPA,#PA\ndataset,10,2,4,3,2,1\n");
}

}  // namespace
}  // namespace anomnet
