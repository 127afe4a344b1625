#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detcal/error.hpp"

namespace detcal {

inline constexpr std::size_t kNumElements = 6;

/// Bounding-box regression elements, in encoding order.
enum class Element : std::uint8_t { cos_theta, sin_theta, dx, dy, log_l, log_w };

inline constexpr std::array<Element, kNumElements> kAllElements = {
    Element::cos_theta, Element::sin_theta, Element::dx,
    Element::dy,        Element::log_l,     Element::log_w};

constexpr std::size_t index_of(Element e) { return static_cast<std::size_t>(e); }

std::string_view element_name(Element e);
std::optional<Element> parse_element(std::string_view name);

struct GaussianMarginal {
  double mean = 0.0;
  double variance = 1.0;

  bool valid() const;
  bool operator==(const GaussianMarginal&) const = default;
};

/// One detection already matched to its ground-truth box.
struct DetectionRecord {
  std::string id;
  double score = 0.0;
  int label = 0;
  std::array<GaussianMarginal, kNumElements> marginals{};
  std::array<double, kNumElements> ground_truth{};

  const GaussianMarginal& marginal(Element e) const { return marginals[index_of(e)]; }
  double truth(Element e) const { return ground_truth[index_of(e)]; }

  bool operator==(const DetectionRecord&) const = default;
};

struct Violation {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

/// Reasons a single record breaks the data model; empty when well-formed.
std::vector<std::string> record_problems(const DetectionRecord& record);

struct ValidationReport {
  std::vector<DetectionRecord> accepted;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Splits records into accepted ones and per-record violations.
ValidationReport check_records(std::vector<DetectionRecord> records);

class ValidationError : public DataError {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// A non-empty, validated, immutable collection of detection records.
class Dataset {
 public:
  std::span<const DetectionRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const DetectionRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  bool operator==(const Dataset&) const = default;

 private:
  friend Dataset validate_dataset(std::vector<DetectionRecord> records);
  explicit Dataset(std::vector<DetectionRecord> records) : records_(std::move(records)) {}

  std::vector<DetectionRecord> records_;
};

/// Throws DataError on empty input and ValidationError listing every bad record.
Dataset validate_dataset(std::vector<DetectionRecord> records);

// ---------------------------------------------------------------------------
// Calibration curves

struct CurvePoint {
  double level = 0.0;                // predicted probability p^m
  std::optional<double> empirical;   // observed frequency; absent for empty bins
  double weight = 0.0;               // N_m / N, or 1/M for regression levels
  std::size_t count = 0;             // records in bin / records at or below level
};

struct CalibrationCurve {
  std::optional<Element> element;  // nullopt for the classification task
  std::vector<CurvePoint> points;
  std::size_t total_count = 0;

  bool is_classification() const { return !element.has_value(); }
};

std::string_view task_name(const CalibrationCurve& curve);
/// "cls" for classification, otherwise the element name.
std::string_view column_name(const CalibrationCurve& curve);

/// Throws DataError unless levels are strictly increasing in [0,1], weights
/// sum to one and empty bins carry zero weight.
void validate_curve(const CalibrationCurve& curve);

// ---------------------------------------------------------------------------
// Recalibration models

struct Knot {
  double input = 0.0;
  double output = 0.0;
  bool operator==(const Knot&) const = default;
};

/// Monotone piecewise-linear map [0,1] -> [0,1].
class IsotonicMap {
 public:
  /// Throws DataError unless inputs strictly increase, outputs never decrease
  /// and every value lies in [0,1].
  explicit IsotonicMap(std::vector<Knot> knots);

  static IsotonicMap identity();

  std::span<const Knot> knots() const { return knots_; }
  std::size_t size() const { return knots_.size(); }

  bool operator==(const IsotonicMap&) const = default;

 private:
  std::vector<Knot> knots_;
};

/// One positive temperature per regression element.
class TemperatureModel {
 public:
  TemperatureModel() { temperatures_.fill(1.0); }
  explicit TemperatureModel(const std::array<double, kNumElements>& temperatures);

  double operator[](Element e) const { return temperatures_[index_of(e)]; }
  const std::array<double, kNumElements>& temperatures() const { return temperatures_; }

  bool operator==(const TemperatureModel&) const = default;

 private:
  std::array<double, kNumElements> temperatures_;
};

enum class ActiveRecalibrator : std::uint8_t { none, isotonic, temperature };

std::string_view active_name(ActiveRecalibrator a);
std::optional<ActiveRecalibrator> parse_active(std::string_view name);

struct ElementRecalibration {
  std::optional<IsotonicMap> isotonic;
  std::optional<double> temperature;
  ActiveRecalibrator active = ActiveRecalibrator::none;

  bool operator==(const ElementRecalibration&) const = default;
};

struct Provenance {
  std::string dataset_id;
  std::string fitted_at;
  bool operator==(const Provenance&) const = default;
};

struct RecalibrationBundle {
  std::optional<IsotonicMap> classification;
  std::array<ElementRecalibration, kNumElements> regression{};
  Provenance provenance;

  ElementRecalibration& operator[](Element e) { return regression[index_of(e)]; }
  const ElementRecalibration& operator[](Element e) const { return regression[index_of(e)]; }

  /// Temperatures of elements whose active recalibrator is temperature; 1 elsewhere.
  TemperatureModel temperature_model() const;

  /// Throws DataError if an active recalibrator lacks its fitted model or a
  /// stored temperature is not positive and finite.
  void validate() const;

  bool operator==(const RecalibrationBundle&) const = default;
};

/// Isotonic maps a detection dump carries after `apply`. Maps in each chain
/// are composed in order: classification maps act on the score, regression
/// maps act on the element's Gaussian CDF value.
struct Annotation {
  std::vector<IsotonicMap> classification;
  std::array<std::vector<IsotonicMap>, kNumElements> regression{};

  bool empty() const;
  bool operator==(const Annotation&) const = default;
};

}  // namespace detcal
