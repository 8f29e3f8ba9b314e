#include "anomnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "anomnet/errors.hpp"

namespace anomnet {

std::string_view to_string(AnomalyLabel label) {
  switch (label) {
    case AnomalyLabel::ND: return "ND";
    case AnomalyLabel::CNA: return "CNA";
    case AnomalyLabel::CPA: return "CPA";
    case AnomalyLabel::PA: return "PA";
  }
  return "?";
}

AnomalyLabel parse_label(std::string_view token) {
  if (token == "ND") return AnomalyLabel::ND;
  if (token == "CNA") return AnomalyLabel::CNA;
  if (token == "CPA") return AnomalyLabel::CPA;
  if (token == "PA") return AnomalyLabel::PA;
  throw ParseError("unknown anomaly label '" + std::string(token) + "'");
}

Dataset::Dataset(std::vector<std::string> feature_names, std::optional<int> num_classes)
    : feature_names_(std::move(feature_names)), num_classes_(num_classes) {}

void Dataset::add(std::vector<double> features, std::optional<int> class_id,
                  std::optional<AnomalyLabel> label) {
  if (features.size() != dimension()) {
    throw ArgumentError("Dataset::add: sample has " + std::to_string(features.size()) +
                        " features, dataset has " + std::to_string(dimension()));
  }
  samples_.push_back(Sample{samples_.size(), std::move(features), class_id, label});
}

bool Dataset::has_labels() const {
  return !samples_.empty() &&
         std::all_of(samples_.begin(), samples_.end(), [](const Sample& s) { return s.label.has_value(); });
}

bool Dataset::has_classes() const {
  return !samples_.empty() && std::all_of(samples_.begin(), samples_.end(),
                                          [](const Sample& s) { return s.class_id.has_value(); });
}

Matrix Dataset::feature_matrix() const {
  Matrix m(samples_.size(), dimension());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    std::copy(samples_[i].features.begin(), samples_[i].features.end(), m.row(i).begin());
  }
  return m;
}

void Dataset::validate() const {
  if (dimension() == 0) throw ArgumentError("dataset has no features");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.id != i) throw ArgumentError("sample ids are not dense at row " + std::to_string(i));
    if (s.features.size() != dimension()) {
      throw ArgumentError("sample " + std::to_string(i) + " has wrong dimension");
    }
    if (s.class_id && num_classes_ && (*s.class_id < 0 || *s.class_id >= *num_classes_)) {
      throw ArgumentError("sample " + std::to_string(i) + " class id out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(begin, end - begin + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

bool parse_int(const std::string& cell, int& out) {
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return !cell.empty() && ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

ColumnRole CsvSchema::role_of(const std::string& column) const {
  if (auto it = roles.find(column); it != roles.end()) return it->second;
  if (column == "label") return ColumnRole::Label;
  if (column == "class") return ColumnRole::Class;
  return ColumnRole::Feature;
}

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV is empty: missing header row");
  const auto header = split_row(line);

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  std::optional<std::size_t> class_col, label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    switch (schema.role_of(header[c])) {
      case ColumnRole::Feature:
        feature_cols.push_back(c);
        names.push_back(header[c]);
        break;
      case ColumnRole::Class:
        if (class_col) throw ParseError("CSV has more than one class column");
        class_col = c;
        break;
      case ColumnRole::Label:
        if (label_col) throw ParseError("CSV has more than one label column");
        label_col = c;
        break;
      case ColumnRole::Ignore:
        break;
    }
  }
  if (feature_cols.empty()) throw ParseError("CSV has no feature columns");

  Dataset ds(names);
  int max_class = -1;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    std::vector<double> features(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      if (!parse_double(cells[feature_cols[j]], features[j])) {
        throw ParseError("row " + std::to_string(row) + ", column '" + header[feature_cols[j]] +
                         "': not a number: '" + cells[feature_cols[j]] + "'");
      }
    }
    std::optional<int> class_id;
    if (class_col) {
      int value = 0;
      if (!parse_int(cells[*class_col], value) || value < 0) {
        throw ParseError("row " + std::to_string(row) + ", column '" + header[*class_col] +
                         "': not a class id: '" + cells[*class_col] + "'");
      }
      class_id = value;
      max_class = std::max(max_class, value);
    }
    std::optional<AnomalyLabel> label;
    if (label_col) {
      try {
        label = parse_label(cells[*label_col]);
      } catch (const ParseError& e) {
        throw ParseError("row " + std::to_string(row) + ": " + e.what());
      }
    }
    ds.add(std::move(features), class_id, label);
  }
  if (class_col) ds.set_num_classes(max_class + 1);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, schema);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  const bool with_class = ds.has_classes();
  const bool with_label = ds.has_labels();
  for (std::size_t j = 0; j < ds.dimension(); ++j) {
    if (j) out << ',';
    out << ds.feature_names()[j];
  }
  if (with_class) out << ",class";
  if (with_label) out << ",label";
  out << '\n';
  for (const Sample& s : ds.samples()) {
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (j) out << ',';
      out << format_double(s.features[j]);
    }
    if (with_class) out << ',' << *s.class_id;
    if (with_label) out << ',' << to_string(*s.label);
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out, ds);
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Normalization

Dataset NormalizationParams::apply(const Dataset& ds) const {
  if (ds.dimension() != min.size()) {
    throw ArgumentError("normalization params have " + std::to_string(min.size()) +
                        " features, dataset has " + std::to_string(ds.dimension()));
  }
  Dataset out = ds;
  for (Sample& s : out.samples()) {
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      const double range = max[j] - min[j];
      s.features[j] = range > 0.0 ? (s.features[j] - min[j]) / range : 0.0;
    }
  }
  return out;
}

void NormalizationParams::write(std::ostream& out) const {
  for (std::size_t j = 0; j < min.size(); ++j) {
    out << names[j] << " = " << format_double(min[j]) << ',' << format_double(max[j]) << '\n';
  }
}

NormalizationParams NormalizationParams::read(std::istream& in) {
  NormalizationParams p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const auto comma = line.find(',', eq == std::string::npos ? 0 : eq);
    double lo = 0, hi = 0;
    if (eq == std::string::npos || comma == std::string::npos ||
        !parse_double(trim(line.substr(eq + 1, comma - eq - 1)), lo) ||
        !parse_double(trim(line.substr(comma + 1)), hi)) {
      throw ParseError("normalization params line " + std::to_string(lineno) + " malformed");
    }
    if (hi < lo) throw ParseError("normalization params line " + std::to_string(lineno) + ": max < min");
    p.names.push_back(trim(line.substr(0, eq)));
    p.min.push_back(lo);
    p.max.push_back(hi);
  }
  return p;
}

std::pair<Dataset, NormalizationParams> minmax_normalize(const Dataset& ds) {
  if (ds.empty()) throw ArgumentError("minmax_normalize: empty dataset");
  NormalizationParams p;
  p.names = ds.feature_names();
  p.min = ds[0].features;
  p.max = ds[0].features;
  for (const Sample& s : ds.samples()) {
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      p.min[j] = std::min(p.min[j], s.features[j]);
      p.max[j] = std::max(p.max[j], s.features[j]);
    }
  }
  return {p.apply(ds), p};
}

// ---------------------------------------------------------------------------
// Weighting and aggregation

std::vector<double> compute_sample_weights(const Dataset& ds,
                                           const std::vector<std::size_t>& discarded) {
  if (discarded.empty()) throw ArgumentError("compute_sample_weights: no discarded features");
  for (std::size_t j : discarded) {
    if (j >= ds.dimension()) throw ArgumentError("compute_sample_weights: feature index out of range");
  }
  std::vector<double> weights(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j : discarded) sum += ds[i].features[j];
    weights[i] = sum / static_cast<double>(discarded.size());
  }
  return weights;
}

Dataset aggregate_features(const Dataset& ds, const std::vector<std::size_t>& retained,
                           const std::vector<double>& weights) {
  if (retained.empty()) throw ArgumentError("aggregate_features: no retained features");
  if (weights.size() != ds.size()) {
    throw ArgumentError("aggregate_features: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(ds.size()) + " samples");
  }
  std::vector<std::string> names;
  for (std::size_t j : retained) {
    if (j >= ds.dimension()) throw ArgumentError("aggregate_features: feature index out of range");
    names.push_back(ds.feature_names()[j]);
  }
  Dataset out(names, ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> f(retained.size());
    for (std::size_t r = 0; r < retained.size(); ++r) f[r] = weights[i] + ds[i].features[retained[r]];
    out.add(std::move(f), ds[i].class_id, ds[i].label);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

void SplitRatios::validate() const {
  if (train < 0 || validation < 0 || test < 0 || train > 1 || validation > 1 || test > 1) {
    throw ArgumentError("split ratios must lie in [0,1]");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw ArgumentError("split ratios must sum to 1");
  }
}

std::array<std::size_t, 3> allocate_split(std::size_t group_size, const SplitRatios& ratios) {
  const std::array<double, 3> shares{ratios.train, ratios.validation, ratios.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int p = 0; p < 3; ++p) {
    const double exact = shares[p] * static_cast<double>(group_size);
    // Guard against 0.7*10 evaluating to 6.999...
    const double rounded = std::floor(exact + 1e-9);
    counts[p] = static_cast<std::size_t>(rounded);
    remainders[p] = std::max(0.0, exact - rounded);
    assigned += counts[p];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < group_size; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out(ds.feature_names(), ds.num_classes());
  for (std::size_t r : rows) out.add(ds[r].features, ds[r].class_id, ds[r].label);
  return out;
}

Split stratified_split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  const bool by_label = ds.has_labels();
  if (!by_label && !ds.has_classes()) {
    throw ArgumentError("stratified_split: samples need an anomaly label or a class id");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int key = by_label ? static_cast<int>(*ds[i].label) : *ds[i].class_id;
    groups[key].push_back(i);
  }

  std::mt19937_64 rng(seed);
  Split split;
  for (auto& [key, rows] : groups) {
    const auto counts = allocate_split(rows.size(), ratios);
    std::shuffle(rows.begin(), rows.end(), rng);
    auto it = rows.begin();
    split.train_rows.insert(split.train_rows.end(), it, it + counts[0]);
    it += counts[0];
    split.validation_rows.insert(split.validation_rows.end(), it, it + counts[1]);
    it += counts[1];
    split.test_rows.insert(split.test_rows.end(), it, it + counts[2]);
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.validation_rows.begin(), split.validation_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  split.train = subset(ds, split.train_rows);
  split.validation = subset(ds, split.validation_rows);
  split.test = subset(ds, split.test_rows);
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic data

int SyntheticSpec::total() const {
  int n = scatter_count;
  for (const Blob& b : blobs) n += b.count;
  return n;
}

SyntheticSpec five_blob_spec() {
  SyntheticSpec spec;
  // Five blobs of unequal size and shape inside [0,10]^2, plus a thin scatter
  // over a wider box so that the kNN score isolates a few dozen points.
  // 60 + 40 + 30 + 30 + 10 + 25 = 195.
  spec.blobs = {
      {2.0, 2.0, 0.35, 0.35, 60},
      {7.5, 2.5, 0.45, 0.30, 40},
      {2.5, 7.5, 0.20, 0.60, 30},
      {7.0, 7.0, 0.60, 0.25, 30},
      {5.0, 5.0, 0.30, 0.30, 10},
  };
  spec.scatter_count = 25;
  spec.box_min_x = -6.0;
  spec.box_max_x = 16.0;
  spec.box_min_y = -6.0;
  spec.box_max_y = 16.0;
  return spec;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.blobs.empty()) throw ArgumentError("generate_synthetic: need at least one blob");
  for (const Blob& b : spec.blobs) {
    if (b.count <= 0) throw ArgumentError("generate_synthetic: blob count must be positive");
    if (b.spread_x < 0 || b.spread_y < 0) throw ArgumentError("generate_synthetic: negative spread");
  }
  if (spec.scatter_count < 0) throw ArgumentError("generate_synthetic: negative scatter count");
  if (spec.box_max_x < spec.box_min_x || spec.box_max_y < spec.box_min_y) {
    throw ArgumentError("generate_synthetic: inverted bounding box");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset ds({"x", "y"});
  for (const Blob& b : spec.blobs) {
    for (int i = 0; i < b.count; ++i) {
      const double dx = gauss(rng);
      const double dy = gauss(rng);
      ds.add({b.center_x + b.spread_x * dx, b.center_y + b.spread_y * dy});
    }
  }
  for (int i = 0; i < spec.scatter_count; ++i) {
    const double ux = unit(rng);
    const double uy = unit(rng);
    ds.add({spec.box_min_x + ux * (spec.box_max_x - spec.box_min_x),
            spec.box_min_y + uy * (spec.box_max_y - spec.box_min_y)});
  }
  return ds;
}

}  // namespace anomnet
