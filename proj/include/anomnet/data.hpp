#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anomnet/matrix.hpp"

namespace anomnet {

/// Four-way anomaly taxonomy. The numeric value doubles as the MLP class index.
enum class AnomalyLabel : int { ND = 0, CNA = 1, CPA = 2, PA = 3 };

inline constexpr int kNumAnomalyLabels = 4;

std::string_view to_string(AnomalyLabel label);
/// Accepts exactly "ND", "CNA", "CPA", "PA"; throws ParseError otherwise.
AnomalyLabel parse_label(std::string_view token);

struct Sample {
  std::size_t id = 0;
  std::vector<double> features;
  std::optional<int> class_id;
  std::optional<AnomalyLabel> label;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> feature_names,
                   std::optional<int> num_classes = std::nullopt);

  /// Appends a sample, assigning the next dense id.
  void add(std::vector<double> features, std::optional<int> class_id = std::nullopt,
           std::optional<AnomalyLabel> label = std::nullopt);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t dimension() const { return feature_names_.size(); }

  const std::vector<Sample>& samples() const { return samples_; }
  std::vector<Sample>& samples() { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  Sample& operator[](std::size_t i) { return samples_[i]; }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::optional<int> num_classes() const { return num_classes_; }
  void set_num_classes(std::optional<int> n) { num_classes_ = n; }

  bool has_labels() const;
  bool has_classes() const;

  /// Feature values as an n x d matrix.
  Matrix feature_matrix() const;

  /// Throws ArgumentError if dimensions, ids or class ids are inconsistent.
  void validate() const;

 private:
  std::vector<Sample> samples_;
  std::vector<std::string> feature_names_;
  std::optional<int> num_classes_;
};

// ---------------------------------------------------------------------------
// CSV

enum class ColumnRole { Feature, Class, Label, Ignore };

/// Maps header names to roles. Unlisted columns fall back to the default
/// rules: "label" is the anomaly label, "class" the class id, anything else a
/// feature.
struct CsvSchema {
  std::map<std::string, ColumnRole> roles;
  ColumnRole role_of(const std::string& column) const;
};

Dataset read_csv(std::istream& in, const CsvSchema& schema = {});
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes features, then "class" and "label" columns when present. Values use
/// the shortest decimal form that round-trips.
void write_csv(std::ostream& out, const Dataset& ds);
void save_csv(const std::filesystem::path& path, const Dataset& ds);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationParams {
  std::vector<std::string> names;
  std::vector<double> min;
  std::vector<double> max;

  /// Maps each feature into [0,1]; constant features map to 0.
  Dataset apply(const Dataset& ds) const;

  void write(std::ostream& out) const;
  static NormalizationParams read(std::istream& in);
};

std::pair<Dataset, NormalizationParams> minmax_normalize(const Dataset& ds);

// ---------------------------------------------------------------------------
// Feature weighting and aggregation

/// Per-sample weight: mean of the sample's values over the discarded features.
std::vector<double> compute_sample_weights(const Dataset& ds,
                                           const std::vector<std::size_t>& discarded);

/// Keeps only the retained features, each shifted by the sample's weight.
Dataset aggregate_features(const Dataset& ds, const std::vector<std::size_t>& retained,
                           const std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;

  void validate() const;
};

struct Split {
  Dataset train;
  Dataset validation;
  Dataset test;
  /// Source row indices of each part, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::vector<std::size_t> test_rows;
};

/// Per-group counts for one group of size `group_size`: floor of each share,
/// then the leftover samples go to the largest fractional remainders (ties
/// favour train, then validation, then test).
std::array<std::size_t, 3> allocate_split(std::size_t group_size, const SplitRatios& ratios);

/// Splits within each anomaly-label group (or class group when the dataset is
/// unlabeled) so every part keeps the group proportions.
Split stratified_split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed);

/// Copy of `ds` restricted to `rows`, with ids renumbered densely.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows);

// ---------------------------------------------------------------------------
// Synthetic data

struct Blob {
  double center_x = 0.0;
  double center_y = 0.0;
  double spread_x = 0.0;
  double spread_y = 0.0;
  int count = 0;
};

struct SyntheticSpec {
  std::vector<Blob> blobs;
  int scatter_count = 0;
  double box_min_x = 0.0;
  double box_max_x = 1.0;
  double box_min_y = 0.0;
  double box_max_y = 1.0;

  int total() const;
};

/// Five blobs plus uniform scatter, 195 points in total.
SyntheticSpec five_blob_spec();

/// Gaussian blobs followed by uniform scatter over the bounding box.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace anomnet
