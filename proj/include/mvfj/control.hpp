#pragma once

#include "mvfj/dynamics.hpp"
#include "mvfj/graph.hpp"
#include "mvfj/kernel.hpp"

#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace mvfj {

/// Lagrange multiplier path lambda(s) of one agent.
///
/// linear:    lambda(s) = lambda0 + rate * s
/// tabulated: breakpoints (s, lambda) joined linearly; the rate is the slope
///            of the segment containing s (held at the end segments).
///
/// The increment over one step is rate(s) * eps.
class MultiplierModel {
public:
  static MultiplierModel linear(double lambda0, double rate);
  /// At least two breakpoints with strictly increasing times.
  static MultiplierModel tabulated(std::vector<std::pair<double, double>> pts);

  bool is_linear() const noexcept { return table_.empty(); }
  double lambda0() const noexcept { return lambda0_; }
  double value(double s) const;
  double rate(double s) const;
  double increment(double s, double eps) const { return rate(s) * eps; }
  const std::vector<std::pair<double, double>> &table() const noexcept {
    return table_;
  }

private:
  double lambda0_ = 0.0;
  double rate_ = 0.0;
  std::vector<std::pair<double, double>> table_;
};

/// Everything the feedback formula needs at one (agent, time) point. Views
/// into caller-owned storage; keep the opinion vector and neighbor row alive.
struct ControlContext {
  double s = 0.0;
  double eps = 0.0;
  std::size_t agent = 0;
  std::span<const double> x;        ///< all agents' opinions at s
  double x0 = 0.0;                  ///< this agent's initial opinion
  double brownian = 0.0;            ///< B_i(s)
  double sigma = 0.0;
  double alpha = 0.0;               ///< alpha(s)
  std::span<const Neighbor> neighbors;
  double stubbornness = 0.0;
  KernelParams kernel;
  double dlambda = 0.0;             ///< multiplier increment over the step
  double dlambda_ds = 0.0;          ///< multiplier rate

  double xi() const { return x[agent]; }
};

struct QuadraticCoefficients {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;

  double discriminant() const { return t2 * t2 - 4.0 * t1 * t3; }
  double evaluate(double u) const { return (t1 * u + t2) * u + t3; }
  double scale() const;
};

enum class RootBranch {
  minus,   ///< (-T2 - sqrt(D)) / (2 T1)
  plus,    ///< "-" root negative, "+" root nonnegative
  clamped, ///< both roots negative, control set to 0
  linear,  ///< |T1| below tolerance, T2 u + T3 = 0
  zero,    ///< |T1| and |T2| below tolerance
};

std::string_view to_string(RootBranch b);

struct ControlSolution {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double discriminant = 0.0;
  std::vector<double> roots;  ///< ascending
  double chosen = 0.0;
  RootBranch branch = RootBranch::minus;
  bool degenerate = false;
};

/// exp(-sigma B + sigma^2 s / 2) at the context point.
double context_integrating_factor(const ControlContext &ctx);

/// T1, T2, T3 of the feedback quadratic T1 u^2 + T2 u + T3 = 0:
///   T1 = 4 I^2 dl^2
///   T2 = -(1 + 2 x I dl) (W + k + I (-alpha K2) dl)
///   T3 = 4 I dl [ S + k (x - x0) + I dl + I dl_ds + I (-alpha - alpha K1) dl ]
/// with I the integrating factor, W = sum_j w_ij, S = sum_j w_ij (x - x_j),
/// and K1, K2 the kernel sums of kernel_sums().
QuadraticCoefficients coefficients(const ControlContext &ctx);

/// Selects the feedback control from given coefficients.
ControlSolution solve_feedback_quadratic(const QuadraticCoefficients &c);

/// coefficients() followed by solve_feedback_quadratic(). Throws
/// ComplexRootsError when the discriminant is negative.
ControlSolution optimal_control(const ControlContext &ctx);

/// The four partial derivatives of f entering the first-order condition.
struct FocPartials {
  double fx = 0.0;   ///< d f / d x_i
  double fxx = 0.0;  ///< d^2 f / d x_i^2
  double fu = 0.0;   ///< d f / d u_i
  double fxu = 0.0;  ///< d^2 f / d x_i d u_i
};

FocPartials foc_partials(const ControlContext &ctx, double u);

/// 2 fx fxu - fu fxx. Expands to T1 u^2 + T2 u + T3, so it vanishes at every
/// real root returned by optimal_control().
double foc_residual(const ControlContext &ctx, double u);

/// The f-function: running cost plus the multiplier terms built from
/// h = x_i * I.
double f_value(const ControlContext &ctx, double u);

/// Case-I coefficients (every opinion equal to x_i), written in the reduced
/// form where the kernel and disagreement terms have dropped out.
QuadraticCoefficients case1_coefficients(const ControlContext &ctx);

/// d u* / d x_i along a uniform shift of all opinions at a Case-I point:
/// implicit derivative of the selected root of the reduced Case-I quadratic,
///   -(T2' u* + T3') / (2 T1 u* + T2),
///   T2' = -2 (W + k) I dl,  T3' = 4 I dl k.
/// Returns 0 when the control was clamped. Throws PreconditionError when the
/// opinions are not all equal or dl == 0, and DomainError at a double root.
double sensitivity_case1_dxi(const ControlContext &ctx);

/// The Case-I derivative expression as printed in closed form, taking the
/// "-" sign:
///   2 T1^-1 (W+k) I dl - 2 {(W+k)^2 g^2 - 64 I^4 dl^3 C}^(-3/2) I g
///     - 64 I^3 dl^3,
/// g = 1 + 2 x I dl, C = k (x - x0) / I + dl + dl_ds - alpha dl.
/// Throws DomainError when the braced term is not positive.
double printed_case1_dxi(const ControlContext &ctx);

/// The same expression specialised to w = k = 0.
double printed_case1_dxi_reduced(const ControlContext &ctx);

/// Closed-form d u* / d x_j for the Case-II regime (x_i < x_j for every
/// neighbor):
///   -4 {sum_j w_ij (x_j - x_i)^(-3/2)} (sum_j w_ij) I^(3/2) dl^(3/2).
/// `probe` must be a neighbor of the agent. Throws PreconditionError when some
/// neighbor has x_j <= x_i, and DomainError when dl < 0.
double sensitivity_case2_dxj(const ControlContext &ctx, std::size_t probe);

/// Implicit derivative of the selected root of the full quadratic with respect
/// to one neighbor's opinion x_j, for neighbors outside the kernel support.
double branch_derivative_dxj(const ControlContext &ctx, std::size_t probe);

/// One logged control evaluation.
struct ControlLogEntry {
  std::size_t step = 0;
  std::size_t agent = 0;
  ControlSolution solution;
};

/// Feedback policy applying optimal_control to every agent at every grid
/// point, with the multiplier increment rate(s) * eps.
class OptimalPolicy {
public:
  OptimalPolicy(std::shared_ptr<const Graph> graph, MultiplierModel multiplier,
                bool keep_log);

  void operator()(const PolicyInput &in, std::span<double> controls);

  /// Entries ordered by (step, agent).
  const std::vector<ControlLogEntry> &log() const noexcept { return *log_; }

private:
  std::shared_ptr<const Graph> graph_;
  MultiplierModel multiplier_;
  std::shared_ptr<std::vector<ControlLogEntry>> log_;
  bool keep_log_;
};

} // namespace mvfj
