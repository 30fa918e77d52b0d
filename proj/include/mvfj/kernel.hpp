#pragma once

#include <cstddef>
#include <span>

namespace mvfj {

/// Interaction kernel parameters: `scale` multiplies the bump, `range` is
/// its centre offset.
struct KernelParams {
  double scale = 0.0;
  double range = 0.0;

  /// Throws ParameterError when scale is negative or either field is not
  /// finite.
  void validate() const;
};

/// Bump kernel
///
///   phi(beta) = scale * exp(-0.01 / (1 - (beta - range)^2))
///
/// on the support {beta > 0, |beta - range| < 1}, and 0 elsewhere. The
/// exponent tends to -inf at |beta - range| -> 1, so the kernel is continuous
/// at that edge. It jumps at beta = 0 whenever |range| < 1.
double phi(const KernelParams &params, double beta);

/// d phi(x_i - x_j) / d x_i. Zero outside the support.
double dphi_dxi(const KernelParams &params, double xi, double xj);

/// d^2 phi(x_i - x_j) / d x_i^2. Zero outside the support.
double d2phi_dxi2(const KernelParams &params, double xi, double xj);

/// (1/n) sum_j phi(x_i - x_j) (x_i - x_j) over all n agents (the j = i term
/// is zero). Throws ParameterError on an empty vector or i out of range.
double mean_field_drift(const KernelParams &params, std::size_t i,
                        std::span<const double> x);

/// Kernel sums used by the feedback control and the variational process,
/// accumulated in one pass over the population:
///   first  = (1/n) sum_j [phi'(b_j) b_j + phi(b_j)]
///   second = (1/n) sum_j [phi''(b_j) b_j + 2 phi'(b_j)]
/// with b_j = x_i - x_j.
struct KernelSums {
  double drift = 0.0;
  double first = 0.0;
  double second = 0.0;
};

KernelSums kernel_sums(const KernelParams &params, double xi,
                       std::span<const double> others, std::size_t n);

} // namespace mvfj
