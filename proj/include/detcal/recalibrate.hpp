#pragma once

#include <span>
#include <utility>
#include <vector>

#include "detcal/core.hpp"

namespace detcal::recalibrate {

struct WeightedPoint {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
};

/// Weighted least-squares non-decreasing fit by pool-adjacent-violators.
/// Points must be sorted by x; equal x values are merged by weighted mean
/// first. One knot per distinct x, outputs clamped to [0,1].
IsotonicMap pava(std::span<const WeightedPoint> points);

/// Fitted block values only (no clamping, no knot construction), one per
/// distinct x. Exposed for testing against brute-force solvers.
std::vector<double> pava_values(std::span<const WeightedPoint> points);

struct ClassificationFitOptions {
  std::vector<double> bin_edges;  // empty: 10 uniform bins
  bool raw_labels = false;        // fit on (score, label) pairs instead of bin accuracies
};

/// Isotonic map from scores to observed accuracy. Throws DegenerateFitError
/// when fewer than two distinct scores exist.
IsotonicMap fit_isotonic_classification(const Dataset& recal, const ClassificationFitOptions& options = {});
IsotonicMap fit_isotonic_classification(std::span<const double> scores, std::span<const int> labels,
                                        const ClassificationFitOptions& options = {});

/// Isotonic map p -> empirical P(F(Y) <= p) built from CDF values p_n with
/// targets rank(p_n)/N; tied values share their average rank.
IsotonicMap fit_isotonic_from_cdf(std::span<const double> cdf_values);
IsotonicMap fit_isotonic_regression_calibrator(const Dataset& recal, Element element);

/// Linear interpolation between knots, clamped outside the knot range.
double apply_isotonic(const IsotonicMap& map, double p);

/// Input whose image is `target`. Flat stretches resolve to their midpoint.
/// Throws DomainError if target lies outside the map's output range.
double invert_isotonic(const IsotonicMap& map, double target);

/// Closed-form NLL-optimal temperature N / sum(z_n^2). Throws
/// DegenerateFitError when every residual is zero.
double fit_temperature(const Dataset& recal, Element element);
double fit_temperature(std::span<const GaussianMarginal> marginals, std::span<const double> truths);

/// Total NLL of the element under variances divided by t (oracle and diagnostics).
double temperature_nll(const Dataset& recal, Element element, double t);

/// Divides each element's variance by its temperature; means untouched.
DetectionRecord apply_temperature(const TemperatureModel& model, const DetectionRecord& record);
Dataset apply_temperature(const TemperatureModel& model, const Dataset& dataset);

/// Central interval at `level` under the element's active recalibrator.
std::pair<double, double> calibrated_interval(const RecalibrationBundle& bundle, const DetectionRecord& record,
                                              Element element, double level);

// --- composition with dump annotations ---------------------------------------

double recalibrated_score(const Annotation& annotation, double score);
double effective_cdf(const Annotation& annotation, Element element, const GaussianMarginal& m, double y);

enum class Method { isotonic, temperature };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Which tasks a fit touches. Classification is always fitted isotonically,
/// since temperature applies to variances only.
struct FitTargets {
  bool classification = true;
  std::array<bool, kNumElements> elements{true, true, true, true, true, true};
};

struct FitOptions {
  Method method = Method::isotonic;
  FitTargets targets;
  ClassificationFitOptions classification;
  Provenance provenance;
};

/// Fits the requested recalibrators on a dataset whose isotonic chains are
/// given by `annotation` (isotonic targets are fitted on the composed CDF).
/// A DegenerateFitError names the failing element.
RecalibrationBundle fit_bundle(const Dataset& recal, const Annotation& annotation, const FitOptions& options);

struct Recalibrated {
  Dataset dataset;
  Annotation annotation;
};

/// Temperature elements get their variances rewritten; isotonic maps are
/// appended to the annotation chains. Throws DataError when temperature would
/// be applied beneath an existing isotonic chain.
Recalibrated apply_bundle(const RecalibrationBundle& bundle, const Dataset& dataset, const Annotation& annotation);

}  // namespace detcal::recalibrate
