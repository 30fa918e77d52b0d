#include "mvfj/cost.hpp"

#include "mvfj/error.hpp"
#include "mvfj/rng.hpp"

#include <cmath>
#include <string>

namespace mvfj {

double running_cost(const Graph &graph, std::span<const double> x,
                    std::span<const double> x0, std::span<const double> u,
                    std::size_t i) {
  if (x.size() != graph.size() || x0.size() != graph.size() ||
      u.size() != graph.size())
    throw ParameterError("running_cost: vector sizes must equal graph size");
  if (i >= graph.size())
    throw ParameterError("running_cost: agent index out of range");
  double disagreement = 0.0;
  for (const auto &nb : graph.neighbors(i)) {
    const double d = x[i] - x[nb.agent];
    disagreement += nb.weight * d * d;
  }
  const double dev = x[i] - x0[i];
  return 0.5 * (disagreement + graph.stubbornness(i) * dev * dev + u[i] * u[i]);
}

CostReport total_cost(std::span<const Trajectory> paths, const Graph &graph,
                      std::size_t i) {
  if (paths.empty())
    throw ParameterError("total_cost: no trajectories");
  if (i >= graph.size())
    throw ParameterError("total_cost: agent index out of range");
  const std::size_t points = paths.front().points();
  const double k_i = graph.stubbornness(i);

  CostReport rep;
  rep.agent = i;
  rep.paths = paths.size();
  std::vector<double> totals;
  totals.reserve(paths.size());
  for (const auto &tr : paths) {
    if (tr.agents() != graph.size() || tr.points() != points ||
        tr.controls.agents() != tr.agents() || tr.controls.points() != points)
      throw ParameterError("total_cost: inconsistent trajectory shapes");
    double dis = 0.0, stub = 0.0, eff = 0.0;
    for (std::size_t k = 0; k + 1 < points; ++k) {
      const double dt = tr.times[k + 1] - tr.times[k];
      const double xi = tr.opinions(i, k);
      double d2 = 0.0;
      for (const auto &nb : graph.neighbors(i)) {
        const double d = xi - tr.opinions(nb.agent, k);
        d2 += nb.weight * d * d;
      }
      const double dev = xi - tr.opinions(i, 0);
      const double u = tr.controls(i, k);
      dis += dt * d2;
      stub += dt * k_i * dev * dev;
      eff += dt * u * u;
    }
    rep.disagreement += dis;
    rep.stubbornness += stub;
    rep.effort += eff;
    totals.push_back(0.5 * (dis + stub + eff));
  }
  const double m = static_cast<double>(paths.size());
  rep.disagreement /= m;
  rep.stubbornness /= m;
  rep.effort /= m;
  rep.total = 0.5 * (rep.disagreement + rep.stubbornness + rep.effort);
  if (paths.size() > 1) {
    double ss = 0.0;
    for (double t : totals)
      ss += (t - rep.total) * (t - rep.total);
    rep.standard_error = std::sqrt(ss / (m - 1.0) / m);
  }
  return rep;
}

VariationalCoefficients variational_coefficients(double x, double u,
                                                 double alpha, double sigma,
                                                 double kernel_slope) {
  return {-alpha - alpha * kernel_slope + u * u, 2.0 * x * u, sigma, 0.0};
}

double variational_step(double v, double vdir,
                        const VariationalCoefficients &c, double eps,
                        double dw) {
  return v + (c.dmu_dx * v + c.dmu_du * vdir) * eps +
         (c.dsigma_dx * v + c.dsigma_du * vdir) * dw;
}

namespace {

// Agent i against a frozen population slice, with its own entry replaced.
struct FrozenStep {
  const SimConfig &cfg;
  const Graph &graph;
  const StateMatrix &frozen;
  std::size_t agent;
  mutable std::vector<double> law;

  std::span<const double> population(std::size_t k, double xi) const {
    const auto slice = frozen.at(k);
    law.assign(slice.begin(), slice.end());
    law[agent] = xi;
    return law;
  }

  double drift(std::size_t k, double xi, double u) const {
    const double s = static_cast<double>(k) * cfg.step;
    return opinion_drift(cfg.kernel, cfg.alpha(s), xi, u, population(k, xi));
  }

  double kernel_slope(std::size_t k, double xi) const {
    return kernel_sums(cfg.kernel, xi, population(k, xi), cfg.n).first;
  }

  // sum_j w_ij (x_i - x_j) + k_i (x_i - x0_i): the state gradient of the
  // running cost.
  double cost_gradient(std::size_t k, double xi) const {
    double g = graph.stubbornness(agent) * (xi - cfg.x0[agent]);
    for (const auto &nb : graph.neighbors(agent))
      g += nb.weight * (xi - frozen(nb.agent, k));
    return g;
  }

  double cost(std::size_t k, double xi, double u) const {
    double d2 = 0.0;
    for (const auto &nb : graph.neighbors(agent)) {
      const double d = xi - frozen(nb.agent, k);
      d2 += nb.weight * d * d;
    }
    const double dev = xi - cfg.x0[agent];
    return 0.5 * (d2 + graph.stubbornness(agent) * dev * dev + u * u);
  }
};

} // namespace

GateauxResult gateaux_derivative(const SimConfig &cfg, const Graph &graph,
                                 const StateMatrix &frozen,
                                 std::span<const double> u_path,
                                 std::span<const double> v_path,
                                 const GateauxWindow &window,
                                 std::size_t paths) {
  cfg.validate();
  const std::size_t steps = cfg.steps();
  const std::size_t i = window.agent;
  if (graph.size() != cfg.n || i >= cfg.n)
    throw ParameterError("gateaux_derivative: agent/graph size mismatch");
  if (frozen.agents() != cfg.n || frozen.points() != steps + 1)
    throw ParameterError("gateaux_derivative: frozen paths do not match grid");
  if (u_path.size() != steps || v_path.size() != steps)
    throw ParameterError("gateaux_derivative: control paths need one entry "
                         "per step");
  if (!(window.first < window.last) || window.last > steps)
    throw ParameterError("gateaux_derivative: window must satisfy "
                         "first < last <= steps");
  if (paths == 0)
    throw ParameterError("gateaux_derivative: paths must be >= 1");

  const FrozenStep sys{cfg, graph, frozen, i, {}};
  const CounterRng rng(cfg.seed);
  const double sqrt_eps = std::sqrt(cfg.step);
  const double sigma = cfg.sigma[i];
  constexpr double kDelta = 1e-4;

  // Common state at the window start.
  double start = cfg.x0[i];
  for (std::size_t k = 0; k < window.first; ++k) {
    const double dw = sqrt_eps * rng.normal(RngStream::brownian, i, k);
    start += sys.drift(k, start, u_path[k]) * cfg.step + sigma * start * dw;
  }

  double sum_analytic = 0.0, sum_sq = 0.0, sum_fd = 0.0;
  std::vector<double> dws(window.last - window.first);
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t k = window.first; k < window.last; ++k)
      dws[k - window.first] =
          sqrt_eps * rng.normal(RngStream::gateaux_window, p, k);

    auto window_cost = [&](double delta) {
      double x = start, acc = 0.0;
      for (std::size_t k = window.first; k < window.last; ++k) {
        const double u = u_path[k] + delta * v_path[k];
        acc += cfg.step * sys.cost(k, x, u);
        x += sys.drift(k, x, u) * cfg.step +
             sigma * x * dws[k - window.first];
      }
      return acc;
    };

    double x = start, V = 0.0, analytic = 0.0;
    for (std::size_t k = window.first; k < window.last; ++k) {
      const double u = u_path[k];
      analytic += cfg.step * (V * sys.cost_gradient(k, x) + u * v_path[k]);
      const double s = static_cast<double>(k) * cfg.step;
      const auto c = variational_coefficients(x, u, cfg.alpha(s), sigma,
                                              sys.kernel_slope(k, x));
      const double dw = dws[k - window.first];
      const double x_next = x + sys.drift(k, x, u) * cfg.step + sigma * x * dw;
      V = variational_step(V, v_path[k], c, cfg.step, dw);
      x = x_next;
    }
    const double fd =
        (window_cost(kDelta) - window_cost(-kDelta)) / (2.0 * kDelta);
    sum_analytic += analytic;
    sum_sq += analytic * analytic;
    sum_fd += fd;
  }

  const double m = static_cast<double>(paths);
  GateauxResult res;
  res.analytic = sum_analytic / m;
  res.finite_difference = sum_fd / m;
  if (paths > 1) {
    const double var =
        std::max(0.0, (sum_sq - m * res.analytic * res.analytic) / (m - 1.0));
    res.analytic_standard_error = std::sqrt(var / m);
  }
  return res;
}

} // namespace mvfj
