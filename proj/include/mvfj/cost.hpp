#pragma once

#include "mvfj/dynamics.hpp"
#include "mvfj/graph.hpp"

#include <span>
#include <vector>

namespace mvfj {

/// 1/2 [ sum_{j in nbr(i)} w_ij (x_i - x_j)^2 + k_i (x_i - x0_i)^2 + u_i^2 ].
double running_cost(const Graph &graph, std::span<const double> x,
                    std::span<const double> x0, std::span<const double> u,
                    std::size_t i);

/// Per-agent cost averaged over sample paths. Components are the time
/// integrals of the three quadratic groups (before the factor 1/2).
struct CostReport {
  std::size_t agent = 0;
  double total = 0.0;
  double disagreement = 0.0;
  double stubbornness = 0.0;
  double effort = 0.0;
  std::size_t paths = 0;
  double standard_error = 0.0;
};

/// Left-endpoint Riemann sum of the running cost over the grid, averaged over
/// paths. Initial opinions are read from each trajectory's first grid point.
/// Throws ParameterError on an empty set or inconsistent shapes.
CostReport total_cost(std::span<const Trajectory> paths, const Graph &graph,
                      std::size_t i);

/// Linearised coefficients of one agent's dynamics with the other agents'
/// paths held fixed.
struct VariationalCoefficients {
  double dmu_dx = 0.0;
  double dmu_du = 0.0;
  double dsigma_dx = 0.0;
  double dsigma_du = 0.0;
};

/// Coefficients at (x, u) for decay alpha, diffusion sigma, and kernel slope
/// (1/n) sum_j [phi'(b_j) b_j + phi(b_j)] against the frozen population:
///   dmu/dx = -alpha - alpha * kernel_slope + u^2,  dmu/du = 2 x u,
///   dsigma/dx = sigma,                              dsigma/du = 0.
VariationalCoefficients variational_coefficients(double x, double u,
                                                 double alpha, double sigma,
                                                 double kernel_slope = 0.0);

/// Euler-Maruyama step of
///   dV = [mu_x V + mu_u v] ds + [sigma_x V + sigma_u v] dB.
double variational_step(double v, double vdir,
                        const VariationalCoefficients &c, double eps,
                        double dw);

/// Grid window [first, last) of Euler steps, and the perturbed agent.
struct GateauxWindow {
  std::size_t agent = 0;
  std::size_t first = 0;
  std::size_t last = 1;
};

struct GateauxResult {
  double analytic = 0.0;
  double finite_difference = 0.0;
  double analytic_standard_error = 0.0;
};

/// Directional derivative of agent i's cost over the window in direction v,
/// with every other agent's path frozen at `frozen` (an opinions matrix on
/// the cfg grid). `u_path` and `v_path` hold agent i's control and direction
/// at each Euler step (size cfg.steps()).
///
/// The state before the window is one common path; `paths` samples differ
/// only in the window noise. The analytic value averages
///   sum_k eps [V_k (sum_j w_ij (x_i - x_j) + k_i (x_i - x0_i)) + u_k v_k]
/// over those paths; the finite difference is the central quotient
/// [L(u + d v) - L(u - d v)] / (2 d), d = 1e-4, on the same noise.
GateauxResult gateaux_derivative(const SimConfig &cfg, const Graph &graph,
                                 const StateMatrix &frozen,
                                 std::span<const double> u_path,
                                 std::span<const double> v_path,
                                 const GateauxWindow &window,
                                 std::size_t paths);

} // namespace mvfj
