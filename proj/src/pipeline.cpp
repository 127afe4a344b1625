#include "detcal/pipeline.hpp"

#include "detcal/synth.hpp"

namespace detcal::pipeline {

eval::EceSummary evaluate(const Dataset& dataset, const Annotation& annotation, const eval::EvalOptions& options) {
  const auto curves = eval::evaluate_all(dataset, annotation, options);
  return eval::summarize(curves);
}

eval::EceSummary fit_and_evaluate(const Dataset& recal, const Dataset& evaluation, recalibrate::Method method,
                                  const eval::EvalOptions& options) {
  recalibrate::FitOptions fit;
  fit.method = method;
  fit.classification.bin_edges = options.bin_edges;
  const auto bundle = recalibrate::fit_bundle(recal, {}, fit);
  const auto applied = recalibrate::apply_bundle(bundle, evaluation, {});
  return evaluate(applied.dataset, applied.annotation, options);
}

std::vector<SweepRow> robustness_sweep(const Dataset& recal, const Dataset& evaluation,
                                       std::span<const double> fractions, recalibrate::Method method,
                                       std::uint64_t seed, const eval::EvalOptions& options) {
  if (fractions.empty()) throw UsageError("sweep needs at least one fraction");
  std::vector<SweepRow> rows;
  rows.reserve(fractions.size());
  for (double f : fractions) {
    const Dataset sample = synth::subsample(recal, f, seed);
    rows.push_back({f, sample.size(), fit_and_evaluate(sample, evaluation, method, options)});
  }
  return rows;
}

CrossEval cross_evaluate(const Dataset& fit_set, const Dataset& eval_set, recalibrate::Method method,
                         const eval::EvalOptions& options) {
  return {evaluate(eval_set, {}, options), fit_and_evaluate(fit_set, eval_set, method, options)};
}

}  // namespace detcal::pipeline
