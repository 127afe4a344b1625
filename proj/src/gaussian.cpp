#include "detcal/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace detcal::gaussian {

namespace {

void require_valid(const GaussianMarginal& m) {
  if (!m.valid()) {
    std::ostringstream os;
    os << "invalid Gaussian marginal (mean " << m.mean << ", variance " << m.variance << ")";
    throw DomainError(os.str());
  }
}

// Acklam, "An algorithm for computing the inverse normal cumulative
// distribution function".
double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_cdf(double z) {
  if (!std::isfinite(z)) throw DomainError("std_normal_cdf: non-finite argument");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream os;
    os << "std_normal_quantile: probability " << p << " outside (0,1)";
    throw DomainError(os.str());
  }
  double x = acklam_quantile(p);
  // Halley refinement; the upper tail works on the complement to avoid
  // cancellation in 1 - Phi(x).
  const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
  for (int step = 0; step < 2; ++step) {
    const double e = (p < 0.5) ? std_normal_cdf(x) - p : (1.0 - p) - std_normal_cdf(-x);
    const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double marginal_cdf(const GaussianMarginal& m, double y) {
  require_valid(m);
  return std_normal_cdf((y - m.mean) / std::sqrt(m.variance));
}

double marginal_quantile(const GaussianMarginal& m, double p) {
  require_valid(m);
  return m.mean + std::sqrt(m.variance) * std_normal_quantile(p);
}

double marginal_nll(const GaussianMarginal& m, double y) {
  require_valid(m);
  const double r = y - m.mean;
  return 0.5 * r * r / m.variance + 0.5 * std::log(m.variance) + 0.5 * std::log(2.0 * std::numbers::pi);
}

double marginal_nll_dmean(const GaussianMarginal& m, double y) {
  require_valid(m);
  return -(y - m.mean) / m.variance;
}

}  // namespace detcal::gaussian
