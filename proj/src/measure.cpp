#include "mvfj/measure.hpp"

#include "mvfj/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mvfj {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples)
    : sorted_(std::move(samples)) {
  if (sorted_.empty())
    throw ParameterError("empirical measure needs at least one sample");
  for (double v : sorted_)
    if (!std::isfinite(v))
      throw ParameterError("empirical measure samples must be finite");
  std::sort(sorted_.begin(), sorted_.end());
}

double wasserstein2_1d(const EmpiricalMeasure &a, const EmpiricalMeasure &b) {
  if (a.size() != b.size())
    throw ParameterError("wasserstein2_1d: sample counts differ (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  const auto sa = a.sorted();
  const auto sb = b.sorted();
  double acc = 0.0;
  for (std::size_t k = 0; k < sa.size(); ++k) {
    const double d = sa[k] - sb[k];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(sa.size()));
}

double wasserstein2_quantile(const EmpiricalMeasure &a,
                             const EmpiricalMeasure &b) {
  const auto sa = a.sorted();
  const auto sb = b.sorted();
  const double ma = static_cast<double>(sa.size());
  const double mb = static_cast<double>(sb.size());
  // Walk the merged breakpoints k/ma and l/mb of the two step quantile
  // functions; on each piece both quantiles are constant. Integer
  // cross-multiplication keeps the breakpoint comparison exact.
  std::size_t ia = 0, ib = 0;
  double prev = 0.0, acc = 0.0;
  while (ia < sa.size() && ib < sb.size()) {
    const auto na = (ia + 1) * sb.size();
    const auto nb = (ib + 1) * sa.size();
    const double next = (na <= nb) ? static_cast<double>(ia + 1) / ma
                                   : static_cast<double>(ib + 1) / mb;
    const double d = sa[ia] - sb[ib];
    acc += (next - prev) * d * d;
    prev = next;
    if (na <= nb)
      ++ia;
    if (nb <= na)
      ++ib;
  }
  return std::sqrt(acc);
}

std::vector<double> kde(std::span<const double> samples, double bandwidth,
                        std::span<const double> grid) {
  if (samples.empty())
    throw ParameterError("kde: no samples");
  if (!(bandwidth > 0.0))
    throw ParameterError("kde: bandwidth must be > 0");
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth *
                             std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double xk : samples) {
      const double z = (grid[g] - xk) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    out[g] = acc * norm;
  }
  return out;
}

double sample_standard_deviation(std::span<const double> samples) {
  if (samples.size() < 2)
    return 0.0;
  double mean = 0.0;
  for (double v : samples)
    mean += v;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double v : samples)
    ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.empty())
    throw ParameterError("silverman_bandwidth: no samples");
  const double sd = sample_standard_deviation(samples);
  if (!(sd > 0.0))
    return 1e-3;
  return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points == 0)
    return {};
  if (points == 1)
    return {lo};
  std::vector<double> out(points);
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k)
    out[k] = lo + h * static_cast<double>(k);
  out.back() = hi;
  return out;
}

double density_quantile(std::span<const double> grid,
                        std::span<const double> density, double p) {
  if (grid.size() != density.size() || grid.size() < 2)
    throw ParameterError("density_quantile: need matching grids of >= 2 points");
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError("density_quantile: p must lie in [0, 1]");
  std::vector<double> cdf(grid.size(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k)
    cdf[k] = cdf[k - 1] +
             0.5 * (density[k] + density[k - 1]) * (grid[k] - grid[k - 1]);
  const double mass = cdf.back();
  if (!(mass > 0.0))
    throw ParameterError("density_quantile: density has no mass on the grid");
  const double target = p * mass;
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.begin())
    return grid.front();
  if (it == cdf.end())
    return grid.back();
  const auto k = static_cast<std::size_t>(it - cdf.begin());
  const double span = cdf[k] - cdf[k - 1];
  const double frac = span > 0.0 ? (target - cdf[k - 1]) / span : 0.0;
  return grid[k - 1] + frac * (grid[k] - grid[k - 1]);
}

} // namespace mvfj
