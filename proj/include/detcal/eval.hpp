#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "detcal/core.hpp"

namespace detcal::eval {

/// M+1 uniform edges over [0,1].
std::vector<double> uniform_bin_edges(std::size_t bins = 10);

/// {0.1, ..., 0.9, 0.95, 0.99}.
std::vector<double> default_levels();

/// Classification curve from raw scores and binary labels. Bins are half-open
/// [e_m, e_{m+1}) except the last, which is closed; the level of each bin is
/// its midpoint.
CalibrationCurve classification_curve(std::span<const double> scores, std::span<const int> labels,
                                      std::span<const double> bin_edges);
CalibrationCurve classification_curve(const Dataset& dataset, std::span<const double> bin_edges);

/// Regression curve from per-record CDF values F_n(y_n): the empirical value
/// at level p is the fraction of CDF values <= p, each level weighted 1/M.
CalibrationCurve regression_curve_from_cdf(std::span<const double> cdf_values, std::span<const double> levels,
                                           std::optional<Element> element = std::nullopt);
CalibrationCurve regression_curve(const Dataset& dataset, Element element, std::span<const double> levels);

/// Weighted absolute deviation from the diagonal.
double ece(const CalibrationCurve& curve);

/// Pearson correlation between the residuals (gt - mean) of two elements.
double error_correlation(const Dataset& dataset, Element a, Element b);
double pearson(std::span<const double> xs, std::span<const double> ys);

struct EvalOptions {
  std::vector<double> bin_edges = uniform_bin_edges();
  std::vector<double> levels = default_levels();
};

/// Curves for classification followed by the six regression elements, with
/// any isotonic chains in `annotation` composed on the fly.
std::vector<CalibrationCurve> evaluate_all(const Dataset& dataset, const Annotation& annotation,
                                           const EvalOptions& options = {});

/// One ECE per column (cls, then elements in encoding order) and their mean.
struct EceSummary {
  std::array<double, kNumElements + 1> columns{};
  double average = 0.0;

  double regression_average() const;
};

EceSummary summarize(std::span<const CalibrationCurve> curves);

// --- delimited text output ----------------------------------------------------

/// Shortest decimal representation that reads back to the same double.
std::string format_real(double v);

/// Plot-data table for one curve: header row, one row per level, then a footer
/// row whose level column reads "ECE" and whose empirical column holds ece(curve).
void write_curve_report(std::ostream& os, const CalibrationCurve& curve, bool with_header = true);

inline constexpr std::string_view kCurveSchema = "# detcal.curve v1";
inline constexpr std::string_view kEceSchema = "# detcal.ece v1";

void write_ece_header(std::ostream& os);
void write_ece_row(std::ostream& os, std::string_view method, const EceSummary& summary);

}  // namespace detcal::eval
