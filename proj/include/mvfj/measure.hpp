#pragma once

#include <span>
#include <vector>

namespace mvfj {

/// Uniformly weighted finite sample set. Samples are kept sorted.
class EmpiricalMeasure {
public:
  /// Throws ParameterError when empty or when any sample is not finite.
  explicit EmpiricalMeasure(std::vector<double> samples);
  explicit EmpiricalMeasure(std::span<const double> samples)
      : EmpiricalMeasure(std::vector<double>(samples.begin(), samples.end())) {}

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }

private:
  std::vector<double> sorted_;
};

/// Exact W2 between equal-size empirical measures via the sorted coupling.
/// Throws ParameterError on a size mismatch.
double wasserstein2_1d(const EmpiricalMeasure &a, const EmpiricalMeasure &b);

/// Exact W2 between empirical measures of any sizes, integrating the squared
/// difference of the two quantile functions over the merged breakpoints.
double wasserstein2_quantile(const EmpiricalMeasure &a,
                             const EmpiricalMeasure &b);

/// Gaussian kernel density estimate at each grid point. Throws
/// ParameterError when bandwidth <= 0 or samples are empty.
std::vector<double> kde(std::span<const double> samples, double bandwidth,
                        std::span<const double> grid);

/// 1.06 * sd * m^(-1/5), with the sample standard deviation. Falls back to
/// 1e-3 when the samples are all equal.
double silverman_bandwidth(std::span<const double> samples);

/// Evenly spaced grid of `points` values over [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t points);

/// p-quantile of a density tabulated on an increasing grid, using the
/// trapezoid CDF normalised to its total mass and linear interpolation.
double density_quantile(std::span<const double> grid,
                        std::span<const double> density, double p);

double sample_standard_deviation(std::span<const double> samples);

} // namespace mvfj
