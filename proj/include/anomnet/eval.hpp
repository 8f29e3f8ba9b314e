#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anomnet {

/// Ratio that may be 0/0. Printed as "NaN%" when undefined.
using Metric = std::optional<double>;

/// C x C counts. Printed with output (predicted) classes as rows and target
/// classes as columns.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(int num_classes, std::vector<std::string> class_names = {});

  int num_classes() const { return classes_; }
  const std::vector<std::string>& class_names() const { return names_; }

  long count(int target, int predicted) const;
  void add(int target, int predicted, long n = 1);

  long total() const;
  long trace() const;
  /// Samples predicted as `c`.
  long predicted_total(int c) const;
  /// Samples whose target is `c`.
  long target_total(int c) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_ = 0;
  std::vector<std::string> names_;
  std::vector<long> counts_;  // [target * C + predicted]
};

ConfusionMatrix confusion(std::span<const int> targets, std::span<const int> predictions, int num_classes,
                          std::vector<std::string> class_names = {});

struct ClassMetrics {
  Metric precision;
  Metric recall;
};

std::vector<ClassMetrics> precision_recall(const ConfusionMatrix& m);

/// 1 - trace/total. Throws ArgumentError on an empty matrix.
double test_error(const ConfusionMatrix& m);

/// Per-class mean of (1 - recall) over classes that occur in the targets.
double mean_class_error(const ConfusionMatrix& m);

struct BinaryCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

/// One-vs-rest reduction for class `c`.
BinaryCounts one_vs_rest(const ConfusionMatrix& m, int c);

struct RateMetrics {
  Metric tpr;
  Metric fpr;
};

RateMetrics tpr_fpr(const ConfusionMatrix& m, int c);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  /// Starts at (0,0) with threshold +inf, ends at (1,1).
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Sweeps a threshold over every distinct score; a sample counts as positive
/// when its score is >= the threshold. Tied scores produce one point.
RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positives);

/// "12.3%" with one decimal, "100%" for exactly one, "NaN%" when undefined.
std::string format_percent(Metric value);

/// Grid layout: count and percent-of-total per cell, precision/miss-rate
/// column on the right, recall row at the bottom, accuracy/test error corner.
void write_confusion_text(std::ostream& out, const ConfusionMatrix& m, const std::string& title);
/// Long format: "target,predicted,count".
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m);
ConfusionMatrix read_confusion_csv(std::istream& in, int num_classes);

void write_roc_csv(std::ostream& out, const RocCurve& curve);

struct RocSeries {
  std::string name;
  const RocCurve* curve = nullptr;
};

/// Static SVG line chart over [0,1]^2 with a diagonal reference line.
void write_roc_svg(std::ostream& out, std::span<const RocSeries> series, const std::string& title);

}  // namespace anomnet
