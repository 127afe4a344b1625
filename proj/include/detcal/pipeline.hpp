#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "detcal/eval.hpp"
#include "detcal/recalibrate.hpp"

namespace detcal::pipeline {

eval::EceSummary evaluate(const Dataset& dataset, const Annotation& annotation, const eval::EvalOptions& options);

/// Fits on `recal`, applies to `evaluation`, and evaluates the result.
eval::EceSummary fit_and_evaluate(const Dataset& recal, const Dataset& evaluation, recalibrate::Method method,
                                  const eval::EvalOptions& options);

struct SweepRow {
  double fraction = 1.0;
  std::size_t recal_count = 0;
  eval::EceSummary summary;
};

/// For each fraction: subsample the recalibration set (nested subsets for a
/// fixed seed), fit, and evaluate on `evaluation`. Rows follow the input order.
std::vector<SweepRow> robustness_sweep(const Dataset& recal, const Dataset& evaluation,
                                       std::span<const double> fractions, recalibrate::Method method,
                                       std::uint64_t seed, const eval::EvalOptions& options);

struct CrossEval {
  eval::EceSummary baseline;
  eval::EceSummary recalibrated;
};

CrossEval cross_evaluate(const Dataset& fit_set, const Dataset& eval_set, recalibrate::Method method,
                         const eval::EvalOptions& options);

}  // namespace detcal::pipeline
