#include "detcal/recalibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "detcal/eval.hpp"
#include "detcal/gaussian.hpp"

namespace detcal::recalibrate {

namespace {

struct Block {
  double weighted_sum;
  double weight;
  std::size_t span;  // number of distinct x merged into this block

  double value() const { return weighted_sum / weight; }
};

std::vector<WeightedPoint> merge_duplicates(std::span<const WeightedPoint> points) {
  if (points.empty()) throw DomainError("isotonic fit of an empty point set");
  std::vector<WeightedPoint> merged;
  merged.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DomainError("isotonic fit: non-finite point");
    if (!(p.w > 0.0) || !std::isfinite(p.w)) throw DomainError("isotonic fit: weights must be positive");
    if (i > 0 && p.x < points[i - 1].x) throw DomainError("isotonic fit: points must be sorted by x");
    if (!merged.empty() && merged.back().x == p.x) {
      auto& m = merged.back();
      m.y = (m.y * m.w + p.y * p.w) / (m.w + p.w);
      m.w += p.w;
    } else {
      merged.push_back(p);
    }
  }
  return merged;
}

std::vector<double> pool(std::span<const WeightedPoint> merged) {
  std::vector<Block> blocks;
  blocks.reserve(merged.size());
  for (const auto& p : merged) {
    blocks.push_back({p.y * p.w, p.w, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value() > blocks.back().value()) {
      Block top = blocks.back();
      blocks.pop_back();
      auto& below = blocks.back();
      below.weighted_sum += top.weighted_sum;
      below.weight += top.weight;
      below.span += top.span;
    }
  }
  std::vector<double> values;
  values.reserve(merged.size());
  for (const auto& b : blocks) values.insert(values.end(), b.span, b.value());
  return values;
}

std::string element_context(Element e) { return "element " + std::string(element_name(e)); }

}  // namespace

std::vector<double> pava_values(std::span<const WeightedPoint> points) {
  const auto merged = merge_duplicates(points);
  return pool(merged);
}

IsotonicMap pava(std::span<const WeightedPoint> points) {
  const auto merged = merge_duplicates(points);
  const auto values = pool(merged);
  std::vector<Knot> knots;
  knots.reserve(merged.size());
  double previous = 0.0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    // Block means are monotone up to rounding; keep them exactly so.
    double v = std::clamp(values[i], 0.0, 1.0);
    if (i > 0) v = std::max(v, previous);
    knots.push_back({merged[i].x, v});
    previous = v;
  }
  return IsotonicMap(std::move(knots));
}

IsotonicMap fit_isotonic_classification(std::span<const double> scores, std::span<const int> labels,
                                        const ClassificationFitOptions& options) {
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  if (order.empty() || scores[order.front()] == scores[order.back()]) {
    throw DegenerateFitError("classification isotonic fit needs at least two distinct scores");
  }

  std::vector<WeightedPoint> points;
  if (options.raw_labels) {
    points.reserve(order.size());
    for (std::size_t n : order) points.push_back({scores[n], labels[n] == 1 ? 1.0 : 0.0, 1.0});
  } else {
    const auto edges = options.bin_edges.empty() ? eval::uniform_bin_edges() : options.bin_edges;
    const auto curve = eval::classification_curve(scores, labels, edges);
    for (const auto& pt : curve.points) {
      if (pt.empirical) points.push_back({pt.level, *pt.empirical, pt.weight});
    }
  }
  return pava(points);
}

IsotonicMap fit_isotonic_classification(const Dataset& recal, const ClassificationFitOptions& options) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : recal) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  return fit_isotonic_classification(scores, labels, options);
}

IsotonicMap fit_isotonic_from_cdf(std::span<const double> cdf_values) {
  if (cdf_values.size() < 2) throw DegenerateFitError("isotonic regression fit needs at least two records");
  std::vector<double> sorted(cdf_values.begin(), cdf_values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw DegenerateFitError("isotonic regression fit: all CDF values are identical");
  }
  const double n = static_cast<double>(sorted.size());
  std::vector<WeightedPoint> points;
  points.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    // 1-based ranks i+1 .. j+1 share their mean
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) points.push_back({sorted[k], rank / n, 1.0});
    i = j + 1;
  }
  return pava(points);
}

IsotonicMap fit_isotonic_regression_calibrator(const Dataset& recal, Element element) {
  std::vector<double> cdf;
  cdf.reserve(recal.size());
  for (const auto& r : recal) cdf.push_back(gaussian::marginal_cdf(r.marginal(element), r.truth(element)));
  try {
    return fit_isotonic_from_cdf(cdf);
  } catch (const DegenerateFitError& e) {
    throw DegenerateFitError(element_context(element) + ": " + e.what());
  }
}

double apply_isotonic(const IsotonicMap& map, double p) {
  const auto knots = map.knots();
  if (p <= knots.front().input) return knots.front().output;
  if (p >= knots.back().input) return knots.back().output;
  const auto it = std::upper_bound(knots.begin(), knots.end(), p,
                                   [](double v, const Knot& k) { return v < k.input; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  const double t = (p - lo.input) / (hi.input - lo.input);
  return std::clamp(lo.output + t * (hi.output - lo.output), lo.output, hi.output);
}

double invert_isotonic(const IsotonicMap& map, double target) {
  const auto knots = map.knots();
  if (!(target >= knots.front().output && target <= knots.back().output)) {
    std::ostringstream os;
    os << "probability " << target << " is outside the recalibration map's range [" << knots.front().output << ", "
       << knots.back().output << "]";
    throw DomainError(os.str());
  }
  auto interpolate = [&](std::size_t k) {
    const Knot& a = knots[k];
    const Knot& b = knots[k + 1];
    return a.input + (target - a.output) / (b.output - a.output) * (b.input - a.input);
  };

  // lowest input reaching the target
  const auto first = static_cast<std::size_t>(
      std::find_if(knots.begin(), knots.end(), [&](const Knot& k) { return k.output >= target; }) - knots.begin());
  const double lo = first == 0 ? knots.front().input : interpolate(first - 1);

  // highest input not exceeding it
  const auto after = static_cast<std::size_t>(
      std::find_if(knots.begin(), knots.end(), [&](const Knot& k) { return k.output > target; }) - knots.begin());
  const double hi = after == knots.size() ? knots.back().input : interpolate(after - 1);

  return 0.5 * (lo + hi);
}

double fit_temperature(std::span<const GaussianMarginal> marginals, std::span<const double> truths) {
  if (marginals.size() != truths.size()) throw DomainError("marginals and truths differ in length");
  if (marginals.empty()) throw DegenerateFitError("temperature fit of an empty dataset");
  double sum_sq = 0.0;
  for (std::size_t n = 0; n < marginals.size(); ++n) {
    if (!marginals[n].valid()) throw DomainError("temperature fit: invalid marginal");
    const double r = truths[n] - marginals[n].mean;
    sum_sq += r * r / marginals[n].variance;
  }
  if (sum_sq == 0.0) {
    throw DegenerateFitError(
        "temperature fit: every residual is zero, so the optimal temperature is unbounded; "
        "use isotonic recalibration or check that ground truth differs from the predicted means");
  }
  const double t = static_cast<double>(marginals.size()) / sum_sq;
  if (!std::isfinite(t)) throw DegenerateFitError("temperature fit: residuals too small, temperature overflows");
  return t;
}

double fit_temperature(const Dataset& recal, Element element) {
  std::vector<GaussianMarginal> marginals;
  std::vector<double> truths;
  marginals.reserve(recal.size());
  truths.reserve(recal.size());
  for (const auto& r : recal) {
    marginals.push_back(r.marginal(element));
    truths.push_back(r.truth(element));
  }
  try {
    return fit_temperature(marginals, truths);
  } catch (const DegenerateFitError& e) {
    throw DegenerateFitError(element_context(element) + ": " + e.what());
  }
}

double temperature_nll(const Dataset& recal, Element element, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("temperature must be positive and finite");
  double total = 0.0;
  for (const auto& r : recal) {
    GaussianMarginal m = r.marginal(element);
    m.variance /= t;
    total += gaussian::marginal_nll(m, r.truth(element));
  }
  return total;
}

DetectionRecord apply_temperature(const TemperatureModel& model, const DetectionRecord& record) {
  DetectionRecord out = record;
  for (Element e : kAllElements) out.marginals[index_of(e)].variance /= model[e];
  return out;
}

Dataset apply_temperature(const TemperatureModel& model, const Dataset& dataset) {
  std::vector<DetectionRecord> records;
  records.reserve(dataset.size());
  for (const auto& r : dataset) records.push_back(apply_temperature(model, r));
  return validate_dataset(std::move(records));
}

std::pair<double, double> calibrated_interval(const RecalibrationBundle& bundle, const DetectionRecord& record,
                                              Element element, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("interval level must lie in (0,1)");
  const auto& rc = bundle[element];
  const GaussianMarginal& m = record.marginal(element);
  if (!m.valid()) throw DomainError("interval of an invalid marginal");

  if (rc.active == ActiveRecalibrator::isotonic) {
    if (!rc.isotonic) throw DataError(element_context(element) + ": isotonic recalibrator has no map");
    const double p_lo = invert_isotonic(*rc.isotonic, 0.5 * (1.0 - level));
    const double p_hi = invert_isotonic(*rc.isotonic, 0.5 * (1.0 + level));
    if (!(p_lo > 0.0 && p_hi < 1.0)) {
      throw DomainError(element_context(element) + ": level is unreachable, interval bound is unbounded");
    }
    return {gaussian::marginal_quantile(m, p_lo), gaussian::marginal_quantile(m, p_hi)};
  }

  double variance = m.variance;
  if (rc.active == ActiveRecalibrator::temperature) {
    if (!rc.temperature) throw DataError(element_context(element) + ": temperature recalibrator has no value");
    variance /= *rc.temperature;
  }
  const double half = gaussian::std_normal_quantile(0.5 * (1.0 + level)) * std::sqrt(variance);
  return {m.mean - half, m.mean + half};
}

double recalibrated_score(const Annotation& annotation, double score) {
  for (const auto& g : annotation.classification) score = apply_isotonic(g, score);
  return score;
}

double effective_cdf(const Annotation& annotation, Element element, const GaussianMarginal& m, double y) {
  double p = gaussian::marginal_cdf(m, y);
  for (const auto& g : annotation.regression[index_of(element)]) p = apply_isotonic(g, p);
  return p;
}

std::string_view method_name(Method m) { return m == Method::isotonic ? "isotonic" : "temperature"; }

std::optional<Method> parse_method(std::string_view name) {
  if (name == "isotonic") return Method::isotonic;
  if (name == "temperature") return Method::temperature;
  return std::nullopt;
}

RecalibrationBundle fit_bundle(const Dataset& recal, const Annotation& annotation, const FitOptions& options) {
  RecalibrationBundle bundle;
  bundle.provenance = options.provenance;

  if (options.targets.classification) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : recal) {
      scores.push_back(recalibrated_score(annotation, r.score));
      labels.push_back(r.label);
    }
    try {
      bundle.classification = fit_isotonic_classification(scores, labels, options.classification);
    } catch (const DegenerateFitError& e) {
      throw DegenerateFitError(std::string("classification: ") + e.what());
    }
  }

  for (Element e : kAllElements) {
    if (!options.targets.elements[index_of(e)]) continue;
    auto& rc = bundle[e];
    if (options.method == Method::temperature) {
      if (!annotation.regression[index_of(e)].empty()) {
        throw DataError(element_context(e) + ": cannot fit a temperature beneath an applied isotonic map");
      }
      rc.temperature = fit_temperature(recal, e);
      rc.active = ActiveRecalibrator::temperature;
    } else {
      std::vector<double> cdf;
      cdf.reserve(recal.size());
      for (const auto& r : recal) cdf.push_back(effective_cdf(annotation, e, r.marginal(e), r.truth(e)));
      try {
        rc.isotonic = fit_isotonic_from_cdf(cdf);
      } catch (const DegenerateFitError& err) {
        throw DegenerateFitError(element_context(e) + ": " + err.what());
      }
      rc.active = ActiveRecalibrator::isotonic;
    }
  }
  return bundle;
}

Recalibrated apply_bundle(const RecalibrationBundle& bundle, const Dataset& dataset, const Annotation& annotation) {
  bundle.validate();
  Annotation out_annotation = annotation;
  if (bundle.classification) out_annotation.classification.push_back(*bundle.classification);

  bool any_temperature = false;
  for (Element e : kAllElements) {
    const auto& rc = bundle[e];
    if (rc.active == ActiveRecalibrator::temperature) {
      if (!annotation.regression[index_of(e)].empty()) {
        throw DataError(element_context(e) + ": cannot rescale variances beneath an applied isotonic map");
      }
      any_temperature = true;
    } else if (rc.active == ActiveRecalibrator::isotonic) {
      out_annotation.regression[index_of(e)].push_back(*rc.isotonic);
    }
  }
  if (!any_temperature) return {dataset, std::move(out_annotation)};
  return {apply_temperature(bundle.temperature_model(), dataset), std::move(out_annotation)};
}

}  // namespace detcal::recalibrate
