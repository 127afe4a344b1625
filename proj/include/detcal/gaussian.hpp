#pragma once

#include "detcal/core.hpp"

namespace detcal::gaussian {

/// Phi(z), computed as erfc(-z/sqrt(2))/2 so both tails keep relative accuracy.
/// Throws DomainError for non-finite z.
double std_normal_cdf(double z);

/// Phi^{-1}(p) for p strictly inside (0,1). Acklam's rational approximation
/// (relative error 1.15e-9) refined by Halley steps against std_normal_cdf.
double std_normal_quantile(double p);

double marginal_cdf(const GaussianMarginal& m, double y);

/// mean + sqrt(variance) * Phi^{-1}(p).
double marginal_quantile(const GaussianMarginal& m, double p);

/// Negative log likelihood of y, to be minimized:
/// (y-mean)^2 / (2 variance) + log(variance)/2 + log(2 pi)/2.
double marginal_nll(const GaussianMarginal& m, double y);

/// d(marginal_nll)/d(mean) = -(y - mean) / variance.
double marginal_nll_dmean(const GaussianMarginal& m, double y);

}  // namespace detcal::gaussian
