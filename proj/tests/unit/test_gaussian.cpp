#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "detcal/gaussian.hpp"
#include "detcal/random.hpp"
#include "oracles.hpp"

using namespace detcal;
using namespace detcal::gaussian;
using detcal::oracle::phi;

namespace {

// Bisection on the CDF itself.
double quantile_by_bisection(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(StdNormalCdf, Symmetry) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.uniform(-8.0, 8.0);
    EXPECT_NEAR(std_normal_cdf(z) + std_normal_cdf(-z), 1.0, 1e-15);
  }
}

TEST(StdNormalCdf, KnownQuantile) {
  EXPECT_NEAR(std_normal_cdf(1.959964), 0.975, 1e-6);
  EXPECT_NEAR(std_normal_cdf(1.959964), phi(1.959964), 1e-15);
}

TEST(StdNormalCdf, MatchesSeriesOracle) {
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double z = rng.uniform(-9.0, 9.0);
    worst = std::max(worst, std::abs(std_normal_cdf(z) - phi(z)));
  }
  for (double z : {-6.0, -3.0, -1.0, -1e-3, 1e-3, 0.5, 1.0, 2.5, 5.0}) {
    worst = std::max(worst, std::abs(std_normal_cdf(z) - phi(z)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(StdNormalCdf, RejectsNonFinite) {
  EXPECT_THROW(std_normal_cdf(std::numeric_limits<double>::quiet_NaN()), DomainError);
  EXPECT_THROW(std_normal_cdf(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(StdNormalQuantile, Basics) {
  EXPECT_EQ(std_normal_quantile(0.5), 0.0);
  EXPECT_NEAR(std_normal_quantile(0.975), 1.959964, 1e-5);
  EXPECT_NEAR(std_normal_quantile(0.975), quantile_by_bisection(0.975), 1e-9);
  EXPECT_THROW(std_normal_quantile(0.0), DomainError);
  EXPECT_THROW(std_normal_quantile(1.0), DomainError);
  EXPECT_THROW(std_normal_quantile(-0.1), DomainError);
  EXPECT_THROW(std_normal_quantile(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(StdNormalQuantile, RoundTrip) {
  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = 1e-8 + (1.0 - 2e-8) * rng.uniform();
    worst = std::max(worst, std::abs(std_normal_cdf(std_normal_quantile(p)) - p));
  }
  for (double p : {1e-8, 1e-6, 0.02425, 0.5, 0.97575, 1 - 1e-6, 1 - 1e-8}) {
    worst = std::max(worst, std::abs(std_normal_cdf(std_normal_quantile(p)) - p));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(StdNormalQuantile, MatchesBisection) {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const double p = 1e-6 + (1.0 - 2e-6) * rng.uniform();
    EXPECT_NEAR(std_normal_quantile(p), quantile_by_bisection(p), 1e-8) << "p=" << p;
  }
}

TEST(StdNormalQuantile, Monotone) {
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < 10000; ++i) {
    const double q = std_normal_quantile(i / 10000.0);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(Marginal, Cdf) {
  EXPECT_EQ(marginal_cdf({3.0, 2.0}, 3.0), 0.5);
  EXPECT_NEAR(marginal_cdf({0.0, 1.0}, 1.959964), 0.975, 1e-6);
  // wider variance pulls the CDF toward one half
  const double narrow = marginal_cdf({0.0, 1.0}, 1.0);
  const double wide = marginal_cdf({0.0, 4.0}, 1.0);
  EXPECT_LT(wide, narrow);
  EXPECT_GT(wide, 0.5);
  EXPECT_NEAR(wide, std_normal_cdf(0.5), 1e-15);
}

TEST(Marginal, Quantile) {
  EXPECT_NEAR(marginal_quantile({1.0, 4.0}, 0.975), 1.0 + 2.0 * 1.959964, 1e-5);
  EXPECT_EQ(marginal_quantile({1.0, 4.0}, 0.5), 1.0);
}

TEST(Marginal, Nll) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(marginal_nll({0.0, 1.0}, 0.0), 0.918939, 1e-6);
  EXPECT_NEAR(marginal_nll({0.0, 1.0}, 0.0), half_log_2pi, 1e-15);
  EXPECT_NEAR(marginal_nll({0.0, 1.0}, 1.0), 0.5 + half_log_2pi, 1e-15);
}

TEST(Marginal, NllGradientMatchesFiniteDifference) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const GaussianMarginal m{rng.uniform(-2, 2), std::exp(rng.uniform(-3, 2))};
    const double y = rng.uniform(-3, 3);
    const double h = 1e-5 * std::max(1.0, std::abs(m.mean));
    const double fd = (marginal_nll({m.mean + h, m.variance}, y) - marginal_nll({m.mean - h, m.variance}, y)) / (2 * h);
    const double an = marginal_nll_dmean(m, y);
    EXPECT_NEAR(an, -(y - m.mean) / m.variance, 1e-15);
    EXPECT_LE(std::abs(fd - an), 1e-6 * std::max(1.0, std::abs(an)));
  }
}
