#include "detcal/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

#include "detcal/gaussian.hpp"
#include "detcal/recalibrate.hpp"

namespace detcal::eval {

namespace {

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw DomainError("need at least two bin edges");
  if (edges.front() != 0.0 || edges.back() != 1.0) throw DomainError("bin edges must span [0,1]");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw DomainError("bin edges must be strictly increasing");
  }
}

void check_levels(std::span<const double> levels) {
  if (levels.empty()) throw DomainError("need at least one confidence level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw DomainError("confidence levels must lie in (0,1)");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw DomainError("confidence levels must be strictly increasing");
  }
}

}  // namespace

std::vector<double> uniform_bin_edges(std::size_t bins) {
  if (bins == 0) throw DomainError("bin count must be positive");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  return edges;
}

std::vector<double> default_levels() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99}; }

CalibrationCurve classification_curve(std::span<const double> scores, std::span<const int> labels,
                                      std::span<const double> bin_edges) {
  check_edges(bin_edges);
  if (scores.empty()) throw DataError("classification curve of an empty dataset");
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");

  const std::size_t bins = bin_edges.size() - 1;
  std::vector<std::size_t> counts(bins, 0), positives(bins, 0);
  for (std::size_t n = 0; n < scores.size(); ++n) {
    const double s = scores[n];
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("score outside [0,1]");
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), s);
    std::size_t m = static_cast<std::size_t>(it - bin_edges.begin());
    m = std::min(m == 0 ? 0 : m - 1, bins - 1);
    ++counts[m];
    if (labels[n] == 1) ++positives[m];
  }

  CalibrationCurve curve;
  curve.total_count = scores.size();
  const double total = static_cast<double>(scores.size());
  for (std::size_t m = 0; m < bins; ++m) {
    CurvePoint pt;
    pt.level = 0.5 * (bin_edges[m] + bin_edges[m + 1]);
    pt.count = counts[m];
    if (counts[m] > 0) {
      pt.empirical = static_cast<double>(positives[m]) / static_cast<double>(counts[m]);
      pt.weight = static_cast<double>(counts[m]) / total;
    }
    curve.points.push_back(pt);
  }
  return curve;
}

CalibrationCurve classification_curve(const Dataset& dataset, std::span<const double> bin_edges) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const auto& r : dataset) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  return classification_curve(scores, labels, bin_edges);
}

CalibrationCurve regression_curve_from_cdf(std::span<const double> cdf_values, std::span<const double> levels,
                                           std::optional<Element> element) {
  check_levels(levels);
  if (cdf_values.empty()) throw DataError("regression curve of an empty dataset");
  std::vector<double> sorted(cdf_values.begin(), cdf_values.end());
  std::sort(sorted.begin(), sorted.end());

  CalibrationCurve curve;
  curve.element = element;
  curve.total_count = sorted.size();
  const double total = static_cast<double>(sorted.size());
  const double weight = 1.0 / static_cast<double>(levels.size());
  for (double p : levels) {
    const auto below = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), p) - sorted.begin());
    curve.points.push_back({p, static_cast<double>(below) / total, weight, below});
  }
  return curve;
}

CalibrationCurve regression_curve(const Dataset& dataset, Element element, std::span<const double> levels) {
  std::vector<double> cdf;
  cdf.reserve(dataset.size());
  for (const auto& r : dataset) cdf.push_back(gaussian::marginal_cdf(r.marginal(element), r.truth(element)));
  return regression_curve_from_cdf(cdf, levels, element);
}

double ece(const CalibrationCurve& curve) {
  validate_curve(curve);
  double total = 0.0;
  for (const auto& pt : curve.points) {
    if (pt.empirical && pt.weight > 0.0) total += pt.weight * std::abs(pt.level - *pt.empirical);
  }
  return std::min(total, 1.0);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("correlation of sequences with different lengths");
  if (xs.size() < 2) throw DomainError("correlation needs at least two samples");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double error_correlation(const Dataset& dataset, Element a, Element b) {
  std::vector<double> ea, eb;
  ea.reserve(dataset.size());
  eb.reserve(dataset.size());
  for (const auto& r : dataset) {
    ea.push_back(r.truth(a) - r.marginal(a).mean);
    eb.push_back(r.truth(b) - r.marginal(b).mean);
  }
  return pearson(ea, eb);
}

std::vector<CalibrationCurve> evaluate_all(const Dataset& dataset, const Annotation& annotation,
                                           const EvalOptions& options) {
  std::vector<CalibrationCurve> curves;
  curves.reserve(kNumElements + 1);

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : dataset) {
    scores.push_back(recalibrate::recalibrated_score(annotation, r.score));
    labels.push_back(r.label);
  }
  curves.push_back(classification_curve(scores, labels, options.bin_edges));

  std::vector<double> cdf(dataset.size());
  for (Element e : kAllElements) {
    for (std::size_t n = 0; n < dataset.size(); ++n) {
      cdf[n] = recalibrate::effective_cdf(annotation, e, dataset[n].marginal(e), dataset[n].truth(e));
    }
    curves.push_back(regression_curve_from_cdf(cdf, options.levels, e));
  }
  return curves;
}

double EceSummary::regression_average() const {
  double total = 0.0;
  for (std::size_t i = 1; i < columns.size(); ++i) total += columns[i];
  return total / static_cast<double>(kNumElements);
}

EceSummary summarize(std::span<const CalibrationCurve> curves) {
  EceSummary summary;
  if (curves.size() != summary.columns.size()) throw DomainError("summary expects classification plus six elements");
  double total = 0.0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    summary.columns[i] = ece(curves[i]);
    total += summary.columns[i];
  }
  summary.average = total / static_cast<double>(curves.size());
  return summary;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_curve_report(std::ostream& os, const CalibrationCurve& curve, bool with_header) {
  if (with_header) os << kCurveSchema << "\ntask,element,level,empirical,weight\n";
  const auto task = task_name(curve);
  const auto col = column_name(curve);
  for (const auto& pt : curve.points) {
    os << task << ',' << col << ',' << format_real(pt.level) << ',';
    if (pt.empirical) os << format_real(*pt.empirical);
    os << ',' << format_real(pt.weight) << '\n';
  }
  os << task << ',' << col << ",ECE," << format_real(ece(curve)) << ",\n";
}

void write_ece_header(std::ostream& os) {
  os << kEceSchema << "\nmethod,cls";
  for (Element e : kAllElements) os << ',' << element_name(e);
  os << ",avg.\n";
}

void write_ece_row(std::ostream& os, std::string_view method, const EceSummary& summary) {
  os << method;
  for (double v : summary.columns) os << ',' << format_real(v);
  os << ',' << format_real(summary.average) << '\n';
}

}  // namespace detcal::eval
