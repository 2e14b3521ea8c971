#pragma once

#include <span>

namespace windgbm {

/// Standard normal CDF.
double normal_cdf(double x);
/// Standard normal quantile; p must lie in (0,1).
double normal_quantile(double p);
double normal_pdf(double x);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 divisor); zero for fewer than two values.
double sample_std(std::span<const double> xs);

}  // namespace windgbm
