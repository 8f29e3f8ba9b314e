#include "anomnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "anomnet/data.hpp"
#include "anomnet/errors.hpp"

namespace anomnet {

ConfusionMatrix::ConfusionMatrix(int num_classes, std::vector<std::string> class_names)
    : classes_(num_classes), names_(std::move(class_names)),
      counts_(static_cast<std::size_t>(num_classes * num_classes), 0) {
  if (num_classes < 1) throw ArgumentError("confusion matrix needs at least one class");
  if (names_.empty()) {
    for (int c = 1; c <= num_classes; ++c) names_.push_back(std::to_string(c));
  }
  if (names_.size() != static_cast<std::size_t>(num_classes)) {
    throw ArgumentError("confusion matrix: class name count does not match class count");
  }
}

long ConfusionMatrix::count(int target, int predicted) const {
  return counts_[static_cast<std::size_t>(target * classes_ + predicted)];
}

void ConfusionMatrix::add(int target, int predicted, long n) {
  if (target < 0 || target >= classes_ || predicted < 0 || predicted >= classes_) {
    throw ArgumentError("confusion: class out of range (target " + std::to_string(target) + ", predicted " +
                        std::to_string(predicted) + ", classes " + std::to_string(classes_) + ")");
  }
  if (n < 0) throw ArgumentError("confusion: negative count");
  counts_[static_cast<std::size_t>(target * classes_ + predicted)] += n;
}

long ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

long ConfusionMatrix::trace() const {
  long t = 0;
  for (int c = 0; c < classes_; ++c) t += count(c, c);
  return t;
}

long ConfusionMatrix::predicted_total(int c) const {
  long t = 0;
  for (int target = 0; target < classes_; ++target) t += count(target, c);
  return t;
}

long ConfusionMatrix::target_total(int c) const {
  long t = 0;
  for (int predicted = 0; predicted < classes_; ++predicted) t += count(c, predicted);
  return t;
}

ConfusionMatrix confusion(std::span<const int> targets, std::span<const int> predictions, int num_classes,
                          std::vector<std::string> class_names) {
  if (targets.size() != predictions.size()) {
    throw ArgumentError("confusion: " + std::to_string(targets.size()) + " targets but " +
                        std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix m(num_classes, std::move(class_names));
  for (std::size_t i = 0; i < targets.size(); ++i) m.add(targets[i], predictions[i]);
  return m;
}

namespace {

Metric ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<ClassMetrics> precision_recall(const ConfusionMatrix& m) {
  std::vector<ClassMetrics> out;
  for (int c = 0; c < m.num_classes(); ++c) {
    out.push_back({ratio(m.count(c, c), m.predicted_total(c)), ratio(m.count(c, c), m.target_total(c))});
  }
  return out;
}

double test_error(const ConfusionMatrix& m) {
  const long total = m.total();
  if (total == 0) throw ArgumentError("test_error: empty confusion matrix");
  return static_cast<double>(total - m.trace()) / static_cast<double>(total);
}

double mean_class_error(const ConfusionMatrix& m) {
  if (m.total() == 0) throw ArgumentError("mean_class_error: empty confusion matrix");
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < m.num_classes(); ++c) {
    const long n = m.target_total(c);
    if (n == 0) continue;
    sum += static_cast<double>(n - m.count(c, c)) / static_cast<double>(n);
    ++present;
  }
  return sum / present;
}

BinaryCounts one_vs_rest(const ConfusionMatrix& m, int c) {
  if (c < 0 || c >= m.num_classes()) throw ArgumentError("one_vs_rest: class out of range");
  BinaryCounts b;
  b.tp = m.count(c, c);
  b.fn = m.target_total(c) - b.tp;
  b.fp = m.predicted_total(c) - b.tp;
  b.tn = m.total() - b.tp - b.fn - b.fp;
  return b;
}

RateMetrics tpr_fpr(const ConfusionMatrix& m, int c) {
  const BinaryCounts b = one_vs_rest(m, c);
  RateMetrics r;
  r.tpr = ratio(b.tp, b.tp + b.fn);
  const Metric tnr = ratio(b.tn, b.tn + b.fp);
  if (tnr) r.fpr = 1.0 - *tnr;
  return r;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positives) {
  if (scores.size() != positives.size()) throw ArgumentError("roc_curve: scores and targets differ in length");
  const long pos = std::count(positives.begin(), positives.end(), true);
  const long neg = static_cast<long>(positives.size()) - pos;
  if (pos == 0 || neg == 0) throw ArgumentError("roc_curve: need at least one positive and one negative sample");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  long tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
  // Twice the area in units of (1/pos)*(1/neg), kept integral.
  long long twice_area = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      if (positives[order[i]]) ++tp; else ++fp;
    }
    twice_area += static_cast<long long>(fp - prev_fp) * (tp + prev_tp);
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
    prev_tp = tp;
    prev_fp = fp;
  }
  curve.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return curve;
}

std::string format_percent(Metric value) {
  if (!value) return "NaN%";
  if (*value == 1.0) return "100%";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << *value * 100.0 << '%';
  return os.str();
}

void write_confusion_text(std::ostream& out, const ConfusionMatrix& m, const std::string& title) {
  constexpr int kCell = 14;
  const int C = m.num_classes();
  const double total = static_cast<double>(m.total());
  const auto metrics = precision_recall(m);
  auto miss = [](Metric v) -> Metric { return v ? Metric(1.0 - *v) : std::nullopt; };
  auto cell = [&](long count) {
    std::ostringstream os;
    os << count << ' ' << format_percent(total > 0 ? Metric(static_cast<double>(count) / total) : std::nullopt);
    return os.str();
  };

  out << title << '\n';
  out << std::left << std::setw(10) << "Output" << std::right;
  for (int t = 0; t < C; ++t) out << std::setw(kCell) << m.class_names()[static_cast<std::size_t>(t)];
  out << std::setw(kCell + 2) << "Precision" << '\n';
  for (int p = 0; p < C; ++p) {
    out << std::left << std::setw(10) << m.class_names()[static_cast<std::size_t>(p)] << std::right;
    for (int t = 0; t < C; ++t) out << std::setw(kCell) << cell(m.count(t, p));
    const auto& pm = metrics[static_cast<std::size_t>(p)].precision;
    out << std::setw(kCell + 2) << (format_percent(pm) + " " + format_percent(miss(pm))) << '\n';
  }
  out << std::left << std::setw(10) << "Recall" << std::right;
  for (int t = 0; t < C; ++t) {
    const auto& rm = metrics[static_cast<std::size_t>(t)].recall;
    out << std::setw(kCell) << (format_percent(rm) + " " + format_percent(miss(rm)));
  }
  const Metric accuracy = total > 0 ? Metric(static_cast<double>(m.trace()) / total) : std::nullopt;
  out << std::setw(kCell + 2) << (format_percent(accuracy) + " " + format_percent(miss(accuracy))) << '\n';
  out << std::left << std::setw(10) << "" << std::right << std::setw(kCell * C) << "Target"
      << std::setw(kCell + 2) << "Test Error" << '\n';
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m) {
  out << "target,predicted,count\n";
  for (int t = 0; t < m.num_classes(); ++t) {
    for (int p = 0; p < m.num_classes(); ++p) out << t << ',' << p << ',' << m.count(t, p) << '\n';
  }
}

ConfusionMatrix read_confusion_csv(std::istream& in, int num_classes) {
  ConfusionMatrix m(num_classes);
  std::string line;
  if (!std::getline(in, line) || line != "target,predicted,count") {
    throw ParseError("confusion CSV: missing 'target,predicted,count' header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    int t = 0, p = 0;
    long n = 0;
    char c1 = 0, c2 = 0;
    if (!(row >> t >> c1 >> p >> c2 >> n) || c1 != ',' || c2 != ',') {
      throw ParseError("confusion CSV: bad row '" + line + "'");
    }
    m.add(t, p, n);
  }
  return m;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "threshold,fpr,tpr\n";
  for (const auto& pt : curve.points) {
    out << (std::isinf(pt.threshold) ? std::string("inf") : format_double(pt.threshold)) << ','
        << format_double(pt.fpr) << ',' << format_double(pt.tpr) << '\n';
  }
}

void write_roc_svg(std::ostream& out, std::span<const RocSeries> series, const std::string& title) {
  constexpr double kSize = 360.0, kLeft = 60.0, kTop = 40.0;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  auto px = [&](double fpr) { return kLeft + fpr * kSize; };
  auto py = [&](double tpr) { return kTop + (1.0 - tpr) * kSize; };
  auto fmt = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kLeft + kSize + 160) << "\" height=\""
      << fmt(kTop + kSize + 60) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << fmt(kLeft + kSize / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(kSize) << "\" height=\""
      << fmt(kSize) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    out << "<text x=\"" << fmt(px(v)) << "\" y=\"" << fmt(kTop + kSize + 16) << "\" text-anchor=\"middle\">"
        << fmt(v) << "</text>\n";
    out << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(py(v) + 4) << "\" text-anchor=\"end\">" << fmt(v)
        << "</text>\n";
  }
  out << "<text x=\"" << fmt(kLeft + kSize / 2) << "\" y=\"" << fmt(kTop + kSize + 36)
      << "\" text-anchor=\"middle\">False positive rate</text>\n";
  out << "<text x=\"16\" y=\"" << fmt(kTop + kSize / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt(kTop + kSize / 2) << ")\">True positive rate</text>\n";
  out << "<line x1=\"" << fmt(px(0)) << "\" y1=\"" << fmt(py(0)) << "\" x2=\"" << fmt(px(1)) << "\" y2=\""
      << fmt(py(1)) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& pt : series[s].curve->points) out << fmt(px(pt.fpr)) << ',' << fmt(py(pt.tpr)) << ' ';
    out << "\"/>\n";
    const double ly = kTop + 16 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << fmt(kLeft + kSize + 12) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(kLeft + kSize + 32) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(kLeft + kSize + 36) << "\" y=\"" << fmt(ly) << "\">" << series[s].name
        << " (AUC " << std::fixed << std::setprecision(3) << series[s].curve->auc << ")</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace anomnet
