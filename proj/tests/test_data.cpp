#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "anomnet/data.hpp"
#include "anomnet/errors.hpp"

namespace anomnet {
namespace {

Dataset read(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

Dataset column(std::vector<double> values) {
  Dataset ds({"x"});
  for (double v : values) ds.add({v});
  return ds;
}

TEST(Csv, ParsesFeatures) {
  const Dataset ds = read("a,b\n1,2\n3,4\n5,6\n");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dimension(), 2u);
  EXPECT_DOUBLE_EQ(ds[2].features[1], 6.0);
  EXPECT_FALSE(ds.has_labels());
}

TEST(Csv, ParsesLabelTokens) {
  const Dataset ds = read("x,label\n1,ND\n2,PA\n3,CPA\n");
  ASSERT_TRUE(ds.has_labels());
  EXPECT_EQ(ds[0].label, AnomalyLabel::ND);
  EXPECT_EQ(ds[1].label, AnomalyLabel::PA);
  EXPECT_EQ(ds[2].label, AnomalyLabel::CPA);
  EXPECT_EQ(ds.dimension(), 1u);
}

TEST(Csv, TextInFeatureColumnNamesTheCell) {
  try {
    read("a,b\n1,2\n3,oops\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("oops"), std::string::npos) << msg;
    EXPECT_NE(msg.find('b'), std::string::npos) << msg;
  }
}

TEST(Csv, RejectsUnknownLabel) { EXPECT_THROW(read("x,label\n1,XX\n"), ParseError); }

TEST(Csv, RoundTripsWithoutLoss) {
  Dataset ds({"f1", "f2"});
  ds.add({0.1, 1.0 / 3.0}, 2, AnomalyLabel::CNA);
  ds.add({-1e-300, 12345.678901234567}, 0, AnomalyLabel::PA);
  std::ostringstream out;
  write_csv(out, ds);
  const Dataset back = read(out.str());
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].features, ds[i].features);
    EXPECT_EQ(back[i].class_id, ds[i].class_id);
    EXPECT_EQ(back[i].label, ds[i].label);
  }
}

TEST(Csv, IgnoredColumnsAreDropped) {
  CsvSchema schema;
  schema.roles["id"] = ColumnRole::Ignore;
  std::istringstream in("id,x\n7,1.5\n");
  const Dataset ds = read_csv(in, schema);
  EXPECT_EQ(ds.dimension(), 1u);
  EXPECT_DOUBLE_EQ(ds[0].features[0], 1.5);
}

TEST(Normalize, AffineMap) {
  auto [ds, params] = minmax_normalize(column({1, 2, 3}));
  EXPECT_DOUBLE_EQ(ds[0].features[0], 0.0);
  EXPECT_DOUBLE_EQ(ds[1].features[0], 0.5);
  EXPECT_DOUBLE_EQ(ds[2].features[0], 1.0);

  auto [ds2, params2] = minmax_normalize(column({-2, 0, 2}));
  EXPECT_DOUBLE_EQ(ds2[1].features[0], 0.5);
}

TEST(Normalize, ConstantColumnMapsToZero) {
  auto [ds, params] = minmax_normalize(column({4, 4, 4}));
  for (const auto& s : ds.samples()) EXPECT_EQ(s.features[0], 0.0);
}

TEST(Normalize, ParamsRoundTrip) {
  auto [ds, params] = minmax_normalize(column({-3, 9}));
  std::stringstream io;
  params.write(io);
  const auto back = NormalizationParams::read(io);
  EXPECT_EQ(back.min, params.min);
  EXPECT_EQ(back.max, params.max);
}

TEST(Weights, MeanOfDiscardedFeatures) {
  Dataset ds({"keep", "d1", "d2", "d3"});
  ds.add({1.0, 0.2, 0.4, 0.6});
  ds.add({1.0, 0.0, 0.0, 0.0});
  const auto w = compute_sample_weights(ds, {1, 2, 3});
  EXPECT_NEAR(w[0], (0.2 + 0.4 + 0.6) / 3.0, 1e-15);
  EXPECT_NEAR(w[0], 0.4, 1e-15);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_DOUBLE_EQ(compute_sample_weights(ds, {2})[0], 0.4);
}

TEST(Weights, SingleDiscardedIsIdentity) {
  Dataset ds({"a", "b"});
  ds.add({0.3, 0.9});
  EXPECT_DOUBLE_EQ(compute_sample_weights(ds, {1})[0], 0.9);
}

TEST(Aggregate, ShiftsRetainedBySampleWeight) {
  Dataset ds({"a", "b", "c"});
  ds.add({0.5, 0.25, 7.0}, 1);
  ds.add({0.1, 0.2, 7.0}, 0);
  const Dataset out = aggregate_features(ds, {0, 1}, {0.4, 0.1});
  EXPECT_EQ(out.dimension(), 2u);
  EXPECT_DOUBLE_EQ(out[0].features[0], 0.9);
  EXPECT_DOUBLE_EQ(out[1].features[0], 0.1 + 0.1);
  EXPECT_DOUBLE_EQ(out[1].features[1], 0.2 + 0.1);
  EXPECT_EQ(out[0].class_id, 1);
}

TEST(Aggregate, ZeroWeightsKeepFeatures) {
  Dataset ds({"a", "b"});
  ds.add({0.5, 0.25});
  const Dataset out = aggregate_features(ds, {0, 1}, {0.0});
  EXPECT_EQ(out[0].features, ds[0].features);
}

Dataset labeled(int nd, int pa) {
  Dataset ds({"x"});
  for (int i = 0; i < nd; ++i) ds.add({static_cast<double>(i)}, std::nullopt, AnomalyLabel::ND);
  for (int i = 0; i < pa; ++i) ds.add({100.0 + i}, std::nullopt, AnomalyLabel::PA);
  return ds;
}

std::size_t count(const Dataset& ds, AnomalyLabel l) {
  return static_cast<std::size_t>(
      std::count_if(ds.samples().begin(), ds.samples().end(), [&](const Sample& s) { return s.label == l; }));
}

TEST(Split, FloorThenLargestRemainder) {
  // 10 * (0.7, 0.15, 0.15) = (7, 1.5, 1.5): one leftover, tie goes to validation.
  const auto a = allocate_split(10, {});
  EXPECT_EQ(a, (std::array<std::size_t, 3>{7, 2, 1}));
  const Split s = stratified_split(labeled(10, 10), {}, 3);
  EXPECT_EQ(count(s.train, AnomalyLabel::ND), 7u);
  EXPECT_EQ(count(s.train, AnomalyLabel::PA), 7u);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), 20u);
}

TEST(Split, PartsArePartition) {
  const Split s = stratified_split(labeled(31, 17), {}, 9);
  std::set<std::size_t> rows;
  for (const auto* part : {&s.train_rows, &s.validation_rows, &s.test_rows}) rows.insert(part->begin(), part->end());
  EXPECT_EQ(rows.size(), 48u);
}

TEST(Split, IdentityRatios) {
  const Dataset ds = labeled(4, 3);
  const Split s = stratified_split(ds, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(s.train.size(), ds.size());
  EXPECT_TRUE(s.validation.empty());
  EXPECT_TRUE(s.test.empty());
}

TEST(Split, Deterministic) {
  const Dataset ds = labeled(20, 20);
  EXPECT_EQ(stratified_split(ds, {}, 5).test_rows, stratified_split(ds, {}, 5).test_rows);
}

TEST(Split, RejectsBadRatios) {
  EXPECT_THROW(SplitRatios({0.5, 0.5, 0.5}).validate(), ArgumentError);
  EXPECT_THROW(SplitRatios({1.2, -0.1, -0.1}).validate(), ArgumentError);
}

TEST(Synthetic, DefaultSpecHas195Points) {
  const Dataset ds = generate_synthetic(five_blob_spec(), 1);
  EXPECT_EQ(ds.size(), 195u);
  EXPECT_EQ(ds.dimension(), 2u);
}

TEST(Synthetic, ZeroSpreadBlobRepeatsCenter) {
  SyntheticSpec spec;
  spec.blobs = {{3.0, -1.0, 0.0, 0.0, 10}};
  const Dataset ds = generate_synthetic(spec, 4);
  ASSERT_EQ(ds.size(), 10u);
  for (const auto& s : ds.samples()) EXPECT_EQ(s.features, (std::vector<double>{3.0, -1.0}));
}

TEST(Synthetic, SameSeedSameCoordinates) {
  const Dataset a = generate_synthetic(five_blob_spec(), 11);
  const Dataset b = generate_synthetic(five_blob_spec(), 11);
  EXPECT_EQ(a.feature_matrix(), b.feature_matrix());
  EXPECT_NE(a.feature_matrix(), generate_synthetic(five_blob_spec(), 12).feature_matrix());
}

}  // namespace
}  // namespace anomnet
