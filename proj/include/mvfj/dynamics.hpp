#pragma once

#include "mvfj/graph.hpp"
#include "mvfj/kernel.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mvfj {

/// Time-dependent decay alpha(s): a constant, or breakpoints joined linearly
/// and held flat outside the table.
class DecaySchedule {
public:
  DecaySchedule() = default;
  static DecaySchedule constant(double value);
  /// Breakpoint times must be strictly increasing; at least one point.
  static DecaySchedule table(std::vector<std::pair<double, double>> points);

  double operator()(double s) const;

  bool is_constant() const noexcept { return points_.size() == 1; }
  const std::vector<std::pair<double, double>> &points() const noexcept {
    return points_;
  }

  friend bool operator==(const DecaySchedule &, const DecaySchedule &) = default;

private:
  std::vector<std::pair<double, double>> points_{{0.0, 0.0}};
};

struct SimConfig {
  std::size_t n = 1;
  double horizon = 1.0;
  double step = 0.01;
  std::vector<double> sigma;   ///< per-agent diffusion, size n
  DecaySchedule alpha;
  KernelParams kernel;
  std::vector<double> x0;      ///< initial opinions in [0, 1], size n
  std::uint64_t seed = 0;
  bool clamp = false;          ///< project onto [0, 1] after each step
  int workers = 1;             ///< threads for agent-parallel stepping

  /// Throws ParameterError on inconsistent sizes, step > horizon, a horizon
  /// that is not a whole number of steps, x0 outside [0, 1] or sigma < 0.
  void validate() const;

  /// Number of Euler steps; the grid has steps() + 1 points.
  std::size_t steps() const;
};

/// Dense (agent, grid point) storage, grid-point-major so that one time slice
/// is contiguous.
class StateMatrix {
public:
  StateMatrix() = default;
  StateMatrix(std::size_t agents, std::size_t points, double fill = 0.0)
      : agents_(agents), points_(points), data_(agents * points, fill) {}

  std::size_t agents() const noexcept { return agents_; }
  std::size_t points() const noexcept { return points_; }

  double &operator()(std::size_t agent, std::size_t k) {
    return data_[k * agents_ + agent];
  }
  double operator()(std::size_t agent, std::size_t k) const {
    return data_[k * agents_ + agent];
  }

  std::span<double> at(std::size_t k) {
    return {data_.data() + k * agents_, agents_};
  }
  std::span<const double> at(std::size_t k) const {
    return {data_.data() + k * agents_, agents_};
  }

  std::vector<double> agent_path(std::size_t agent) const;

  friend bool operator==(const StateMatrix &, const StateMatrix &) = default;

private:
  std::size_t agents_ = 0;
  std::size_t points_ = 0;
  std::vector<double> data_;
};

/// Simulated paths on the grid s_k = k * step, k = 0..steps.
///
/// step_costs(i, k) is the running-cost rate of agent i at s_k; the cost over
/// [s_k, s_k+1] is step_costs(i, k) * step (left endpoint).
struct Trajectory {
  std::vector<double> times;
  StateMatrix opinions;
  StateMatrix controls;
  StateMatrix brownian;
  StateMatrix step_costs;
  /// (agent, step) updates that left [0, 1] before any clamping.
  std::size_t out_of_range = 0;

  std::size_t agents() const noexcept { return opinions.agents(); }
  std::size_t points() const noexcept { return times.size(); }

  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

/// Everything a feedback policy sees at grid point k.
struct PolicyInput {
  std::size_t step;
  double time;
  double eps;
  std::span<const double> opinions;
  std::span<const double> brownian;
  std::span<const double> initial;
  const SimConfig &config;
};

/// Writes one control per agent into `controls`.
using Policy =
    std::function<void(const PolicyInput &, std::span<double> controls)>;

Policy zero_policy();
Policy constant_policy(double u);

/// Drift of one agent under the controlled opinion dynamics,
///   -alpha x - alpha (1/n) sum_j phi(x - law_j)(x - law_j) + x u^2,
/// where `law` holds the n opinions the agent interacts with.
double opinion_drift(const KernelParams &kernel, double alpha, double x,
                     double u, std::span<const double> law);

/// One simultaneous Euler-Maruyama step at time s:
///   x_i + drift_i * eps + sigma_i x_i dW_i
/// evaluated at the pre-step state for every agent, then clamped to [0, 1]
/// when cfg.clamp is set.
std::vector<double> step(std::span<const double> x, std::span<const double> u,
                         const SimConfig &cfg, double s,
                         std::span<const double> dw);

/// Integrates the particle system on [0, horizon] under a closed-loop policy.
/// Brownian increments are keyed by (seed, agent, step), so results do not
/// depend on cfg.workers. Throws PolicyError naming the step when the policy
/// throws.
Trajectory simulate(const SimConfig &cfg, const Graph &graph,
                    const Policy &policy);

/// exp(-sigma B(s) + sigma^2 s / 2).
double integrating_factor(double sigma, double brownian, double s);

struct PicardResult {
  Trajectory trajectory;
  /// W2 between terminal empirical laws of successive iterates.
  std::vector<double> terminal_w2;
  /// max over grid points of the per-time W2 between successive iterates.
  std::vector<double> sup_w2;
  bool converged = false;
};

/// Fixed-point iteration on laws. Iterate 0 re-simulates every agent against
/// the frozen law of constant initial opinions; iterate m re-simulates against
/// the full opinion matrix of iterate m-1, always with the same Brownian
/// paths. Stops once the terminal W2 to the previous iterate drops below
/// `tol` or after `max_iter` distances have been recorded.
PicardResult picard_law_iteration(const SimConfig &cfg, const Graph &graph,
                                  const Policy &policy, double tol,
                                  std::size_t max_iter);

} // namespace mvfj
