#include "detcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "detcal/random.hpp"

namespace detcal::synth {

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double reported_score(const ScoreConfig& cfg, double q) {
  switch (cfg.law) {
    case ScoreLaw::calibrated:
      return q;
    case ScoreLaw::logit_shift:
      return sigmoid(logit(q) + cfg.shift);
    case ScoreLaw::compressed: {
      const double pivot = logit(cfg.pivot);
      return sigmoid(pivot + cfg.compression * (logit(q) - pivot));
    }
  }
  return q;
}

std::vector<std::size_t> choose(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    std::ostringstream os;
    os << "subsample fraction " << fraction << " outside (0,1]";
    throw UsageError(os.str());
  }
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string_view score_law_name(ScoreLaw law) {
  switch (law) {
    case ScoreLaw::logit_shift:
      return "logit_shift";
    case ScoreLaw::compressed:
      return "compressed";
    case ScoreLaw::calibrated:
      break;
  }
  return "calibrated";
}

std::optional<ScoreLaw> parse_score_law(std::string_view name) {
  if (name == "calibrated") return ScoreLaw::calibrated;
  if (name == "logit_shift") return ScoreLaw::logit_shift;
  if (name == "compressed") return ScoreLaw::compressed;
  return std::nullopt;
}

SynthConfig& SynthConfig::inflate(double c) {
  for (auto& e : elements) e.inflation = c;
  return *this;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw UsageError("invalid synthetic config: " + what); };
  if (n < 1) fail("n must be at least 1");
  for (Element e : kAllElements) {
    const auto& ec = elements[index_of(e)];
    const std::string name(element_name(e));
    if (!(ec.inflation > 0.0) || !std::isfinite(ec.inflation)) fail("inflation for " + name + " must be > 0");
    if (!(ec.variance_min > 0.0) || !(ec.variance_max >= ec.variance_min) || !std::isfinite(ec.variance_max)) {
      fail("variance range for " + name + " must satisfy 0 < min <= max");
    }
    if (!std::isfinite(ec.bias)) fail("bias for " + name + " must be finite");
  }
  if (!std::isfinite(score.shift)) fail("score shift must be finite");
  if (!(score.compression > 0.0) || !std::isfinite(score.compression)) fail("score compression must be > 0");
  if (!(score.pivot > 0.0 && score.pivot < 1.0)) fail("score pivot must lie in (0,1)");
}

SynthConfig standard_miscalibrated(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.inflate(4.0);
  cfg.score.law = ScoreLaw::compressed;
  cfg.score.compression = 0.5;
  cfg.score.pivot = 0.7;
  return cfg;
}

Dataset generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<DetectionRecord> records;
  records.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    DetectionRecord r;
    r.id = "syn-" + std::to_string(i);
    const double q = rng.uniform_open();
    r.label = rng.uniform() < q ? 1 : 0;
    r.score = std::clamp(reported_score(config.score, q), 0.0, 1.0);
    for (Element e : kAllElements) {
      const auto& ec = config.elements[index_of(e)];
      const double u = rng.uniform();
      const double true_var = ec.variance_min * std::pow(ec.variance_max / ec.variance_min, u);
      const double true_mean = rng.uniform(-1.0, 1.0);
      const double noise = rng.normal();
      r.ground_truth[index_of(e)] = true_mean + std::sqrt(true_var) * noise;
      r.marginals[index_of(e)] = {true_mean + ec.bias, ec.inflation * true_var};
    }
    records.push_back(std::move(r));
  }
  return validate_dataset(std::move(records));
}

Split split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  const auto chosen = choose(dataset.size(), fraction, seed);
  Split out;
  out.sample.reserve(chosen.size());
  out.remainder.reserve(dataset.size() - chosen.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (next < chosen.size() && chosen[next] == i) {
      out.sample.push_back(dataset[i]);
      ++next;
    } else {
      out.remainder.push_back(dataset[i]);
    }
  }
  return out;
}

Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed) {
  return validate_dataset(split(dataset, fraction, seed).sample);
}

}  // namespace detcal::synth
