#pragma once

#include <optional>
#include <span>

namespace bds::beta {

/// Regularized incomplete beta function I_x(a, b).
double beta_cdf(double x, double a, double b);

/// Beta density, used by the quadrature checks.
double beta_pdf(double x, double a, double b);

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

/// Method-of-moments fit on samples in (0, 1). Empty when the sample variance
/// is zero or too large for any Beta distribution.
std::optional<BetaParams> fit_moments(std::span<const double> samples);

}  // namespace bds::beta
