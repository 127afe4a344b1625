#pragma once

#include <string>
#include <vector>

#include "detcal/core.hpp"

namespace detcal::testing {

// Record with the same marginal and truth on every element.
inline DetectionRecord make_record(std::string id, double score, int label, double mean = 0.0,
                                   double variance = 1.0, double truth = 0.0) {
  DetectionRecord r;
  r.id = std::move(id);
  r.score = score;
  r.label = label;
  r.marginals.fill({mean, variance});
  r.ground_truth.fill(truth);
  return r;
}

// Dataset whose records share unit variance and zero mean, with given truths on every element.
inline Dataset from_truths(const std::vector<double>& truths, double variance = 1.0) {
  std::vector<DetectionRecord> rs;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    rs.push_back(make_record("r" + std::to_string(i), 0.5, static_cast<int>(i % 2), 0.0, variance, truths[i]));
  }
  return validate_dataset(std::move(rs));
}

}  // namespace detcal::testing
