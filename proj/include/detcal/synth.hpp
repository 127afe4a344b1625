#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "detcal/core.hpp"

namespace detcal::synth {

/// How the reported score relates to the true positive probability q.
enum class ScoreLaw {
  calibrated,   // s = q
  logit_shift,  // logit(s) = logit(q) + shift
  compressed,   // logit(s) = logit(pivot) + compression * (logit(q) - logit(pivot))
};

std::string_view score_law_name(ScoreLaw law);
std::optional<ScoreLaw> parse_score_law(std::string_view name);

struct ScoreConfig {
  ScoreLaw law = ScoreLaw::calibrated;
  double shift = 0.0;
  // compression < 1 makes scores over-confident below the pivot and
  // under-confident above it
  double compression = 1.0;
  double pivot = 0.5;
};

struct ElementConfig {
  double variance_min = 0.01;  // true variance is log-uniform on [min, max]
  double variance_max = 0.25;
  double inflation = 1.0;  // reported variance = inflation * true variance
  double bias = 0.0;       // reported mean = true mean + bias
};

struct SynthConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::array<ElementConfig, kNumElements> elements{};
  ScoreConfig score;

  /// Sets the same inflation on every element.
  SynthConfig& inflate(double c);

  /// Throws UsageError naming the offending field.
  void validate() const;
};

/// Inflation c on every element and scores compressed by 0.5 around 0.7:
/// over-confident low scores, under-confident high scores, under-confident
/// box variances.
SynthConfig standard_miscalibrated(std::size_t n, std::uint64_t seed);

/// Draw order per record: q, label, then per element (true variance, true
/// mean, noise). Deterministic for a given seed.
Dataset generate(const SynthConfig& config);

/// Uniform sample without replacement of round(fraction * N) records (at
/// least one), in original order.
Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed);

struct Split {
  std::vector<DetectionRecord> sample;
  std::vector<DetectionRecord> remainder;
};

/// Same selection as subsample, also returning the unselected records.
Split split(const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace detcal::synth
