#include "mvfj/dynamics.hpp"

#include "mvfj/cost.hpp"
#include "mvfj/error.hpp"
#include "mvfj/measure.hpp"
#include "mvfj/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvfj {

DecaySchedule DecaySchedule::constant(double value) {
  if (!std::isfinite(value))
    throw ParameterError("decay must be finite");
  DecaySchedule d;
  d.points_ = {{0.0, value}};
  return d;
}

DecaySchedule
DecaySchedule::table(std::vector<std::pair<double, double>> points) {
  if (points.empty())
    throw ParameterError("decay table needs at least one breakpoint");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k].first) || !std::isfinite(points[k].second))
      throw ParameterError("decay table entries must be finite");
    if (k > 0 && !(points[k].first > points[k - 1].first))
      throw ParameterError("decay table times must be strictly increasing");
  }
  DecaySchedule d;
  d.points_ = std::move(points);
  return d;
}

double DecaySchedule::operator()(double s) const {
  if (s <= points_.front().first)
    return points_.front().second;
  if (s >= points_.back().first)
    return points_.back().second;
  const auto it = std::upper_bound(
      points_.begin(), points_.end(), s,
      [](double key, const auto &p) { return key < p.first; });
  const auto &hi = *it;
  const auto &lo = *(it - 1);
  const double w = (s - lo.first) / (hi.first - lo.first);
  return lo.second + w * (hi.second - lo.second);
}

void SimConfig::validate() const {
  if (n == 0)
    throw ParameterError("n must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ParameterError("horizon must be > 0");
  if (!(step > 0.0) || !std::isfinite(step))
    throw ParameterError("step must be > 0");
  if (step > horizon)
    throw ParameterError("step must not exceed the horizon");
  const double ratio = horizon / step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw ParameterError("horizon must be a whole number of steps");
  if (sigma.size() != n)
    throw ParameterError("sigma has " + std::to_string(sigma.size()) +
                         " entries, expected " + std::to_string(n));
  if (x0.size() != n)
    throw ParameterError("x0 has " + std::to_string(x0.size()) +
                         " entries, expected " + std::to_string(n));
  for (double s : sigma)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ParameterError("sigma must be finite and >= 0");
  for (double v : x0)
    if (!(v >= 0.0 && v <= 1.0))
      throw ParameterError("initial opinions must lie in [0, 1]");
  kernel.validate();
  if (workers < 1)
    throw ParameterError("workers must be >= 1");
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / step));
}

std::vector<double> StateMatrix::agent_path(std::size_t agent) const {
  std::vector<double> out(points_);
  for (std::size_t k = 0; k < points_; ++k)
    out[k] = (*this)(agent, k);
  return out;
}

Policy zero_policy() {
  return [](const PolicyInput &, std::span<double> u) {
    std::fill(u.begin(), u.end(), 0.0);
  };
}

Policy constant_policy(double value) {
  return [value](const PolicyInput &, std::span<double> u) {
    std::fill(u.begin(), u.end(), value);
  };
}

double opinion_drift(const KernelParams &kernel, double alpha, double x,
                     double u, std::span<const double> law) {
  double interaction = 0.0;
  if (kernel.scale != 0.0) {
    for (double xj : law) {
      const double b = x - xj;
      interaction += phi(kernel, b) * b;
    }
    interaction /= static_cast<double>(law.size());
  }
  return -alpha * x - alpha * interaction + x * u * u;
}

namespace {

void check_sizes(std::size_t n, std::size_t got, const char *what) {
  if (got != n)
    throw ParameterError(std::string(what) + " has " + std::to_string(got) +
                         " entries, expected " + std::to_string(n));
}

// Advances every agent one step. `law` is the population each agent interacts
// with: the current state for the particle system, a frozen slice for the
// law iteration. Returns the number of updates that left [0, 1].
std::size_t advance(std::span<const double> x, std::span<const double> law,
                    std::span<const double> u, std::span<const double> dw,
                    const SimConfig &cfg, double s, std::span<double> out) {
  const double alpha = cfg.alpha(s);
  const auto n = static_cast<long>(x.size());
  std::size_t escaped = 0;
#pragma omp parallel for num_threads(cfg.workers) schedule(static) reduction(+ : escaped)
  for (long idx = 0; idx < n; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    const double drift = opinion_drift(cfg.kernel, alpha, x[i], u[i], law);
    double next = x[i] + drift * cfg.step + cfg.sigma[i] * x[i] * dw[i];
    if (next < 0.0 || next > 1.0) {
      ++escaped;
      if (cfg.clamp)
        next = std::clamp(next, 0.0, 1.0);
    }
    out[i] = next;
  }
  return escaped;
}

Trajectory allocate(const SimConfig &cfg) {
  const std::size_t points = cfg.steps() + 1;
  Trajectory tr;
  tr.times.resize(points);
  for (std::size_t k = 0; k < points; ++k)
    tr.times[k] = static_cast<double>(k) * cfg.step;
  tr.opinions = StateMatrix(cfg.n, points);
  tr.controls = StateMatrix(cfg.n, points);
  tr.brownian = StateMatrix(cfg.n, points);
  tr.step_costs = StateMatrix(cfg.n, points);
  return tr;
}

// Brownian paths keyed by (seed, agent, step). dW is recovered as the stored
// difference so that B(k+1) - B(k) == dW holds bit for bit.
void fill_brownian(const SimConfig &cfg, StateMatrix &b) {
  const CounterRng rng(cfg.seed);
  const double sqrt_eps = std::sqrt(cfg.step);
  for (std::size_t k = 0; k + 1 < b.points(); ++k)
    for (std::size_t i = 0; i < cfg.n; ++i)
      b(i, k + 1) =
          b(i, k) + sqrt_eps * rng.normal(RngStream::brownian, i, k);
}

std::vector<double> increments(const StateMatrix &b, std::size_t k) {
  std::vector<double> dw(b.agents());
  for (std::size_t i = 0; i < b.agents(); ++i)
    dw[i] = b(i, k + 1) - b(i, k);
  return dw;
}

void apply_policy(const Policy &policy, const PolicyInput &in,
                  std::span<double> u) {
  try {
    policy(in, u);
  } catch (const AgentControlError &e) {
    throw PolicyError(in.step, e.agent(), e.cause(),
                      "policy failed at step " + std::to_string(in.step) +
                          ", agent " + std::to_string(e.agent()) + ": " +
                          e.what());
  } catch (const std::exception &e) {
    throw PolicyError(in.step, std::nullopt, std::current_exception(),
                      "policy failed at step " + std::to_string(in.step) +
                          ": " + e.what());
  }
}

// Shared driver: `frozen` is null for the interacting particle system.
Trajectory run(const SimConfig &cfg, const Graph &graph, const Policy &policy,
               const StateMatrix *frozen) {
  cfg.validate();
  if (graph.size() != cfg.n)
    throw ParameterError("graph has " + std::to_string(graph.size()) +
                         " agents, config has " + std::to_string(cfg.n));
  Trajectory tr = allocate(cfg);
  fill_brownian(cfg, tr.brownian);
  std::copy(cfg.x0.begin(), cfg.x0.end(), tr.opinions.at(0).begin());

  const std::size_t last = tr.points() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const PolicyInput in{k,       tr.times[k],       cfg.step,
                         tr.opinions.at(k), tr.brownian.at(k), cfg.x0,
                         cfg};
    apply_policy(policy, in, tr.controls.at(k));
    for (std::size_t i = 0; i < cfg.n; ++i)
      tr.step_costs(i, k) =
          running_cost(graph, tr.opinions.at(k), cfg.x0, tr.controls.at(k), i);
    if (k == last)
      break;
    const auto dw = increments(tr.brownian, k);
    const std::span<const double> law =
        frozen ? frozen->at(k) : std::span<const double>(tr.opinions.at(k));
    tr.out_of_range += advance(tr.opinions.at(k), law, tr.controls.at(k), dw,
                               cfg, tr.times[k], tr.opinions.at(k + 1));
  }
  return tr;
}

} // namespace

std::vector<double> step(std::span<const double> x, std::span<const double> u,
                         const SimConfig &cfg, double s,
                         std::span<const double> dw) {
  check_sizes(cfg.n, x.size(), "opinion vector");
  check_sizes(cfg.n, u.size(), "control vector");
  check_sizes(cfg.n, dw.size(), "noise vector");
  check_sizes(cfg.n, cfg.sigma.size(), "sigma");
  std::vector<double> out(x.size());
  advance(x, x, u, dw, cfg, s, out);
  return out;
}

Trajectory simulate(const SimConfig &cfg, const Graph &graph,
                    const Policy &policy) {
  return run(cfg, graph, policy, nullptr);
}

double integrating_factor(double sigma, double brownian, double s) {
  return std::exp(-sigma * brownian + 0.5 * sigma * sigma * s);
}

PicardResult picard_law_iteration(const SimConfig &cfg, const Graph &graph,
                                  const Policy &policy, double tol,
                                  std::size_t max_iter) {
  if (!(tol > 0.0))
    throw ParameterError("picard tolerance must be > 0");
  if (max_iter == 0)
    throw ParameterError("picard needs max_iter >= 1");
  cfg.validate();

  StateMatrix law(cfg.n, cfg.steps() + 1);
  for (std::size_t k = 0; k < law.points(); ++k)
    std::copy(cfg.x0.begin(), cfg.x0.end(), law.at(k).begin());

  PicardResult result;
  result.trajectory = run(cfg, graph, policy, &law);
  while (result.terminal_w2.size() < max_iter) {
    Trajectory next = run(cfg, graph, policy, &result.trajectory.opinions);
    const std::size_t last = next.points() - 1;
    double sup = 0.0;
    for (std::size_t k = 0; k <= last; ++k)
      sup = std::max(sup, wasserstein2_1d(
                              EmpiricalMeasure(next.opinions.at(k)),
                              EmpiricalMeasure(result.trajectory.opinions.at(k))));
    const double terminal =
        wasserstein2_1d(EmpiricalMeasure(next.opinions.at(last)),
                        EmpiricalMeasure(result.trajectory.opinions.at(last)));
    result.terminal_w2.push_back(terminal);
    result.sup_w2.push_back(sup);
    result.trajectory = std::move(next);
    if (terminal < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

} // namespace mvfj
