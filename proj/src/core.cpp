#include "detcal/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace detcal {

namespace {

constexpr std::array<std::string_view, kNumElements> kElementNames = {
    "cos_theta", "sin_theta", "dx", "dy", "log_l", "log_w"};

bool in_unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string summarize(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << violations.size() << " invalid record(s)";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& v = violations[i];
    os << (i == 0 ? ": " : "; ") << "record " << v.index << " (id '" << v.id << "'): " << v.reason;
  }
  if (shown < violations.size()) os << "; ...";
  return os.str();
}

}  // namespace

std::string_view element_name(Element e) { return kElementNames[index_of(e)]; }

std::optional<Element> parse_element(std::string_view name) {
  for (std::size_t i = 0; i < kNumElements; ++i) {
    if (kElementNames[i] == name) return kAllElements[i];
  }
  return std::nullopt;
}

bool GaussianMarginal::valid() const {
  return std::isfinite(mean) && std::isfinite(variance) && variance > 0.0;
}

std::vector<std::string> record_problems(const DetectionRecord& record) {
  std::vector<std::string> problems;
  if (!in_unit_interval(record.score)) {
    std::ostringstream os;
    os << "score " << record.score << " outside [0,1]";
    problems.push_back(os.str());
  }
  if (record.label != 0 && record.label != 1) {
    problems.push_back("label " + std::to_string(record.label) + " is not binary");
  }
  for (Element e : kAllElements) {
    const auto& m = record.marginal(e);
    const std::string name(element_name(e));
    if (!std::isfinite(m.mean)) problems.push_back("non-finite mean for " + name);
    if (!std::isfinite(m.variance)) {
      problems.push_back("non-finite variance for " + name);
    } else if (m.variance <= 0.0) {
      std::ostringstream os;
      os << "variance " << m.variance << " <= 0 for " << name;
      problems.push_back(os.str());
    }
    if (!std::isfinite(record.truth(e))) problems.push_back("non-finite ground truth for " + name);
  }
  return problems;
}

ValidationReport check_records(std::vector<DetectionRecord> records) {
  ValidationReport report;
  report.accepted.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto problems = record_problems(records[i]);
    if (problems.empty()) {
      report.accepted.push_back(std::move(records[i]));
      continue;
    }
    std::string reason = problems.front();
    for (std::size_t k = 1; k < problems.size(); ++k) reason += ", " + problems[k];
    report.violations.push_back({i, records[i].id, std::move(reason)});
  }
  return report;
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : DataError(summarize(violations)), violations_(std::move(violations)) {}

Dataset validate_dataset(std::vector<DetectionRecord> records) {
  if (records.empty()) throw DataError("dataset is empty");
  auto report = check_records(std::move(records));
  if (!report.ok()) throw ValidationError(std::move(report.violations));
  return Dataset(std::move(report.accepted));
}

std::string_view task_name(const CalibrationCurve& curve) {
  return curve.is_classification() ? "classification" : "regression";
}

std::string_view column_name(const CalibrationCurve& curve) {
  return curve.is_classification() ? std::string_view("cls") : element_name(*curve.element);
}

void validate_curve(const CalibrationCurve& curve) {
  if (curve.points.empty()) throw DataError("calibration curve has no points");
  double weight_sum = 0.0;
  for (std::size_t m = 0; m < curve.points.size(); ++m) {
    const auto& pt = curve.points[m];
    if (!in_unit_interval(pt.level)) throw DataError("curve level outside [0,1]");
    if (m > 0 && !(pt.level > curve.points[m - 1].level)) {
      throw DataError("curve levels are not strictly increasing");
    }
    if (!in_unit_interval(pt.weight)) throw DataError("curve weight outside [0,1]");
    if (pt.empirical) {
      if (!in_unit_interval(*pt.empirical)) throw DataError("curve empirical value outside [0,1]");
    } else if (pt.weight != 0.0) {
      throw DataError("curve bin without samples carries nonzero weight");
    }
    weight_sum += pt.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) throw DataError("curve weights do not sum to one");
}

IsotonicMap::IsotonicMap(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw DataError("isotonic map needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto& k = knots_[i];
    if (!in_unit_interval(k.input) || !in_unit_interval(k.output)) {
      throw DataError("isotonic knot outside [0,1]");
    }
    if (i > 0) {
      if (!(k.input > knots_[i - 1].input)) throw DataError("isotonic knot inputs not strictly increasing");
      if (k.output < knots_[i - 1].output) throw DataError("isotonic knot outputs decrease");
    }
  }
}

IsotonicMap IsotonicMap::identity() { return IsotonicMap({{0.0, 0.0}, {1.0, 1.0}}); }

TemperatureModel::TemperatureModel(const std::array<double, kNumElements>& temperatures)
    : temperatures_(temperatures) {
  for (double t : temperatures_) {
    if (!std::isfinite(t) || t <= 0.0) throw DataError("temperature must be positive and finite");
  }
}

std::string_view active_name(ActiveRecalibrator a) {
  switch (a) {
    case ActiveRecalibrator::isotonic:
      return "isotonic";
    case ActiveRecalibrator::temperature:
      return "temperature";
    case ActiveRecalibrator::none:
      break;
  }
  return "none";
}

std::optional<ActiveRecalibrator> parse_active(std::string_view name) {
  if (name == "none") return ActiveRecalibrator::none;
  if (name == "isotonic") return ActiveRecalibrator::isotonic;
  if (name == "temperature") return ActiveRecalibrator::temperature;
  return std::nullopt;
}

TemperatureModel RecalibrationBundle::temperature_model() const {
  std::array<double, kNumElements> t{};
  for (Element e : kAllElements) {
    const auto& r = (*this)[e];
    t[index_of(e)] = (r.active == ActiveRecalibrator::temperature && r.temperature) ? *r.temperature : 1.0;
  }
  return TemperatureModel(t);
}

void RecalibrationBundle::validate() const {
  for (Element e : kAllElements) {
    const auto& r = (*this)[e];
    const std::string name(element_name(e));
    if (r.temperature && (!std::isfinite(*r.temperature) || *r.temperature <= 0.0)) {
      throw DataError("temperature for " + name + " must be positive and finite");
    }
    if (r.active == ActiveRecalibrator::isotonic && !r.isotonic) {
      throw DataError("isotonic recalibrator active for " + name + " but no map is stored");
    }
    if (r.active == ActiveRecalibrator::temperature && !r.temperature) {
      throw DataError("temperature recalibrator active for " + name + " but no temperature is stored");
    }
  }
}

bool Annotation::empty() const {
  return classification.empty() &&
         std::all_of(regression.begin(), regression.end(), [](const auto& chain) { return chain.empty(); });
}

}  // namespace detcal
