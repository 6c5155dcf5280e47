#pragma once

#include <span>

namespace spinent::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance (N-1 normalization).
double variance(std::span<const double> x);
double covariance(std::span<const double> x, std::span<const double> y);
double correlation(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares y = slope·x + intercept.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace spinent::stats
