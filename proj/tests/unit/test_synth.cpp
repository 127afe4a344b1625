#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "detcal/eval.hpp"
#include "detcal/io.hpp"
#include "detcal/random.hpp"
#include "detcal/synth.hpp"

using namespace detcal;
using namespace detcal::synth;

namespace {

std::set<std::string> ids(const Dataset& d) {
  std::set<std::string> out;
  for (const auto& r : d) out.insert(r.id);
  return out;
}

SynthConfig sized(std::size_t n, std::uint64_t seed, double c = 1.0) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.inflate(c);
  return cfg;
}

}  // namespace

TEST(Rng, KnownStreamAndRanges) {
  Rng a(1), b(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng r(2);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double o = r.uniform_open();
    EXPECT_GT(o, 0.0);
    EXPECT_LT(o, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(Rng, NormalMoments) {
  Rng r(3);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Generate, Deterministic) {
  auto a = generate(standard_miscalibrated(500, 9));
  auto b = generate(standard_miscalibrated(500, 9));
  EXPECT_EQ(a, b);
  std::ostringstream sa, sb;
  io::write_dump(sa, a);
  io::write_dump(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_NE(generate(standard_miscalibrated(500, 10)), a);
}

TEST(Generate, InvalidConfig) {
  EXPECT_THROW(sized(100, 0, 0.0).validate(), UsageError);
  EXPECT_THROW(sized(0, 0).validate(), UsageError);
  SynthConfig cfg = sized(10, 0);
  cfg.elements[2].variance_min = 0.5;
  cfg.elements[2].variance_max = 0.1;
  EXPECT_THROW(generate(cfg), UsageError);
}

TEST(Generate, CalibratedHasSmallEce) {
  auto d = generate(sized(100000, 11));
  for (const auto& c : eval::evaluate_all(d, {})) EXPECT_LT(eval::ece(c), 0.01) << column_name(c);
}

TEST(Generate, ResidualVarianceMatchesInflation) {
  for (double c : {1.0, 4.0}) {
    auto d = generate(sized(100000, 12, c));
    for (Element e : kAllElements) {
      double ratio = 0.0;
      for (const auto& r : d) {
        const double res = r.truth(e) - r.marginal(e).mean;
        ratio += res * res / (r.marginal(e).variance / c);
      }
      ratio /= static_cast<double>(d.size());
      EXPECT_GE(ratio, 0.95);
      EXPECT_LE(ratio, 1.05);
    }
  }
}

TEST(Generate, BiasShiftsMeans) {
  SynthConfig cfg = sized(20000, 13);
  for (auto& e : cfg.elements) e.bias = 0.3;
  auto d = generate(cfg);
  double mean_res = 0.0;
  for (const auto& r : d) mean_res += r.truth(Element::dx) - r.marginal(Element::dx).mean;
  EXPECT_NEAR(mean_res / d.size(), -0.3, 0.01);
}

TEST(Subsample, Counts) {
  auto d = generate(sized(10000, 14));
  EXPECT_EQ(subsample(d, 0.01, 1).size(), 100u);
  EXPECT_EQ(subsample(d, 0.004, 1).size(), 40u);
  EXPECT_EQ(subsample(d, 1e-9, 1).size(), 1u);
  EXPECT_EQ(subsample(d, 1.0, 1), d);
  EXPECT_THROW(subsample(d, 0.0, 1), UsageError);
  EXPECT_THROW(subsample(d, 1.5, 1), UsageError);
}

TEST(Subsample, OrderPreservedAndSeedsDiffer) {
  auto d = generate(sized(1000, 15));
  auto a = subsample(d, 0.1, 1);
  auto b = subsample(d, 0.1, 2);
  EXPECT_NE(ids(a), ids(b));
  std::size_t pos = 0;
  for (const auto& r : a) {
    while (pos < d.size() && d[pos].id != r.id) ++pos;
    ASSERT_LT(pos, d.size());
  }
}

TEST(Subsample, NestedForOneSeed) {
  auto d = generate(sized(2000, 16));
  auto big = ids(subsample(d, 0.5, 3));
  auto mid = ids(subsample(d, 0.1, 3));
  auto small = ids(subsample(d, 0.01, 3));
  EXPECT_TRUE(std::includes(big.begin(), big.end(), mid.begin(), mid.end()));
  EXPECT_TRUE(std::includes(mid.begin(), mid.end(), small.begin(), small.end()));
}

TEST(Split, PartitionsTheDataset) {
  auto d = generate(sized(999, 17));
  auto parts = split(d, 0.3, 4);
  EXPECT_EQ(parts.sample.size(), 300u);
  EXPECT_EQ(parts.sample.size() + parts.remainder.size(), d.size());
  std::set<std::string> seen;
  for (const auto& r : parts.sample) seen.insert(r.id);
  for (const auto& r : parts.remainder) EXPECT_TRUE(seen.insert(r.id).second);
}
