#include "mvfj/kernel.hpp"

#include "mvfj/error.hpp"

#include <cmath>

namespace mvfj {

namespace {

constexpr double kBumpWidth = 0.01;

// Shifted argument z = beta - range and q = 1 - z^2, or nothing outside the
// support.
struct SupportPoint {
  bool inside;
  double z;
  double q;
};

inline SupportPoint locate(const KernelParams &p, double beta) {
  if (!(beta > 0.0))
    return {false, 0.0, 0.0};
  const double z = beta - p.range;
  const double q = 1.0 - z * z;
  if (!(q > 0.0))
    return {false, 0.0, 0.0};
  return {true, z, q};
}

} // namespace

void KernelParams::validate() const {
  if (!std::isfinite(scale) || !std::isfinite(range))
    throw ParameterError("kernel parameters must be finite");
  if (scale < 0.0)
    throw ParameterError("kernel scale must be >= 0");
}

double phi(const KernelParams &p, double beta) {
  const auto pt = locate(p, beta);
  if (!pt.inside)
    return 0.0;
  return p.scale * std::exp(-kBumpWidth / pt.q);
}

double dphi_dxi(const KernelParams &p, double xi, double xj) {
  const auto pt = locate(p, xi - xj);
  if (!pt.inside)
    return 0.0;
  const double e = std::exp(-kBumpWidth / pt.q);
  return -2.0 * kBumpWidth * p.scale * e * pt.z / (pt.q * pt.q);
}

double d2phi_dxi2(const KernelParams &p, double xi, double xj) {
  const auto pt = locate(p, xi - xj);
  if (!pt.inside)
    return 0.0;
  // d/dbeta of -0.02 s e z q^-2 with e' = -0.02 e z q^-2 and q' = -2 z:
  //   -0.02 s e [q^-2 + 4 z^2 q^-3 - 0.02 z^2 q^-4]
  const double e = std::exp(-kBumpWidth / pt.q);
  const double z2 = pt.z * pt.z;
  const double q2 = pt.q * pt.q;
  const double bracket =
      1.0 / q2 + 4.0 * z2 / (q2 * pt.q) - 2.0 * kBumpWidth * z2 / (q2 * q2);
  return -2.0 * kBumpWidth * p.scale * e * bracket;
}

double mean_field_drift(const KernelParams &p, std::size_t i,
                        std::span<const double> x) {
  if (x.empty())
    throw ParameterError("mean_field_drift: empty opinion vector");
  if (i >= x.size())
    throw ParameterError("mean_field_drift: agent index out of range");
  double sum = 0.0;
  for (double xj : x) {
    const double b = x[i] - xj;
    sum += phi(p, b) * b;
  }
  return sum / static_cast<double>(x.size());
}

KernelSums kernel_sums(const KernelParams &p, double xi,
                       std::span<const double> others, std::size_t n) {
  KernelSums s;
  if (p.scale == 0.0)
    return s;
  for (double xj : others) {
    const double b = xi - xj;
    const auto pt = locate(p, b);
    if (!pt.inside)
      continue;
    const double e = p.scale * std::exp(-kBumpWidth / pt.q);
    const double z2 = pt.z * pt.z;
    const double q2 = pt.q * pt.q;
    const double d1 = -2.0 * kBumpWidth * e * pt.z / q2;
    const double d2 = -2.0 * kBumpWidth * e *
                      (1.0 / q2 + 4.0 * z2 / (q2 * pt.q) -
                       2.0 * kBumpWidth * z2 / (q2 * q2));
    s.drift += e * b;
    s.first += d1 * b + e;
    s.second += d2 * b + 2.0 * d1;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  s.drift *= inv_n;
  s.first *= inv_n;
  s.second *= inv_n;
  return s;
}

} // namespace mvfj
