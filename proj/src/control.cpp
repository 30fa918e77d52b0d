#include "mvfj/control.hpp"

#include "mvfj/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

namespace mvfj {

MultiplierModel MultiplierModel::linear(double lambda0, double rate) {
  if (!std::isfinite(lambda0) || !std::isfinite(rate))
    throw ParameterError("multiplier parameters must be finite");
  MultiplierModel m;
  m.lambda0_ = lambda0;
  m.rate_ = rate;
  return m;
}

MultiplierModel
MultiplierModel::tabulated(std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 2)
    throw ParameterError("tabulated multiplier needs at least two breakpoints");
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!std::isfinite(pts[k].first) || !std::isfinite(pts[k].second))
      throw ParameterError("multiplier table entries must be finite");
    if (k > 0 && !(pts[k].first > pts[k - 1].first))
      throw ParameterError("multiplier breakpoints must be strictly increasing");
  }
  MultiplierModel m;
  m.lambda0_ = pts.front().second;
  m.table_ = std::move(pts);
  return m;
}

namespace {

// Index of the segment [table[k], table[k+1]] used for s.
std::size_t segment(const std::vector<std::pair<double, double>> &t, double s) {
  const auto it = std::upper_bound(
      t.begin(), t.end(), s,
      [](double key, const auto &p) { return key < p.first; });
  const auto k = static_cast<std::size_t>(it - t.begin());
  if (k == 0)
    return 0;
  return std::min(k - 1, t.size() - 2);
}

} // namespace

double MultiplierModel::value(double s) const {
  if (is_linear())
    return lambda0_ + rate_ * s;
  const auto k = segment(table_, s);
  return table_[k].second + rate(s) * (s - table_[k].first);
}

double MultiplierModel::rate(double s) const {
  if (is_linear())
    return rate_;
  const auto k = segment(table_, s);
  return (table_[k + 1].second - table_[k].second) /
         (table_[k + 1].first - table_[k].first);
}

double QuadraticCoefficients::scale() const {
  return std::abs(t1) + std::abs(t2) + std::abs(t3);
}

std::string_view to_string(RootBranch b) {
  switch (b) {
  case RootBranch::minus:
    return "minus";
  case RootBranch::plus:
    return "plus";
  case RootBranch::clamped:
    return "clamped";
  case RootBranch::linear:
    return "linear";
  case RootBranch::zero:
    return "zero";
  }
  return "unknown";
}

double context_integrating_factor(const ControlContext &ctx) {
  return integrating_factor(ctx.sigma, ctx.brownian, ctx.s);
}

namespace {

// Pieces shared by the coefficients, the FOC partials and f itself.
struct ContextTerms {
  double x;
  double factor;        // integrating factor I
  double weight_sum;    // W
  double disagreement;  // S = sum_j w_ij (x - x_j)
  double disagreement2; // sum_j w_ij (x - x_j)^2
  KernelSums kernel;
  double fxx;           // W + k + I (-alpha K2) dl
  double fx_base;       // fx without the I u^2 dl term
  double gain;          // 1 + 2 x I dl
};

ContextTerms terms(const ControlContext &ctx) {
  if (ctx.agent >= ctx.x.size())
    throw ParameterError("control context: agent index out of range");
  ContextTerms t{};
  t.x = ctx.xi();
  t.factor = context_integrating_factor(ctx);
  for (const auto &nb : ctx.neighbors) {
    const double d = t.x - ctx.x[nb.agent];
    t.weight_sum += nb.weight;
    t.disagreement += nb.weight * d;
    t.disagreement2 += nb.weight * d * d;
  }
  t.kernel = kernel_sums(ctx.kernel, t.x, ctx.x, ctx.x.size());
  const double dl = ctx.dlambda;
  const double I = t.factor;
  t.fxx = t.weight_sum + ctx.stubbornness +
          I * (-ctx.alpha * t.kernel.second) * dl;
  t.fx_base = t.disagreement + ctx.stubbornness * (t.x - ctx.x0) + I * dl +
              I * ctx.dlambda_ds +
              I * (-ctx.alpha - ctx.alpha * t.kernel.first) * dl;
  t.gain = 1.0 + 2.0 * t.x * I * dl;
  return t;
}

} // namespace

QuadraticCoefficients coefficients(const ControlContext &ctx) {
  const auto t = terms(ctx);
  const double I = t.factor;
  const double dl = ctx.dlambda;
  return {4.0 * I * I * dl * dl, -t.gain * t.fxx, 4.0 * I * dl * t.fx_base};
}

ControlSolution solve_feedback_quadratic(const QuadraticCoefficients &c) {
  ControlSolution sol;
  sol.t1 = c.t1;
  sol.t2 = c.t2;
  sol.t3 = c.t3;
  sol.discriminant = c.discriminant();

  const double tol = 1e-12 * (1.0 + std::abs(c.t2) + std::abs(c.t3));
  if (std::abs(c.t1) < tol) {
    sol.degenerate = true;
    if (std::abs(c.t2) < tol) {
      sol.branch = RootBranch::zero;
      sol.chosen = 0.0;
      return sol;
    }
    sol.branch = RootBranch::linear;
    sol.chosen = -c.t3 / c.t2;
    sol.roots = {sol.chosen};
    return sol;
  }

  if (sol.discriminant < 0.0)
    throw ComplexRootsError(c.t1, c.t2, c.t3);

  // Cancellation-free pair: q / T1 and T3 / q.
  const double root_d = std::sqrt(sol.discriminant);
  const double q = -0.5 * (c.t2 + std::copysign(root_d, c.t2));
  double r1 = 0.0, r2 = 0.0;
  if (q != 0.0) {
    r1 = q / c.t1;
    r2 = c.t3 / q;
  }
  const double lo = std::min(r1, r2);
  const double hi = std::max(r1, r2);
  sol.roots = {lo, hi};
  const double minus = c.t1 > 0.0 ? lo : hi;
  const double plus = c.t1 > 0.0 ? hi : lo;

  if (minus >= 0.0) {
    sol.branch = RootBranch::minus;
    sol.chosen = minus;
  } else if (plus >= 0.0) {
    sol.branch = RootBranch::plus;
    sol.chosen = plus;
  } else {
    sol.branch = RootBranch::clamped;
    sol.chosen = 0.0;
    sol.degenerate = true;
  }
  return sol;
}

ControlSolution optimal_control(const ControlContext &ctx) {
  return solve_feedback_quadratic(coefficients(ctx));
}

FocPartials foc_partials(const ControlContext &ctx, double u) {
  const auto t = terms(ctx);
  const double I = t.factor;
  const double dl = ctx.dlambda;
  FocPartials p;
  p.fx = t.fx_base + I * u * u * dl;
  p.fxx = t.fxx;
  p.fu = u * t.gain;
  p.fxu = 2.0 * I * dl;
  return p;
}

double foc_residual(const ControlContext &ctx, double u) {
  const auto p = foc_partials(ctx, u);
  return 2.0 * p.fx * p.fxu - p.fu * p.fxx;
}

double f_value(const ControlContext &ctx, double u) {
  const auto t = terms(ctx);
  const double I = t.factor;
  const double dl = ctx.dlambda;
  const double dev = t.x - ctx.x0;
  const double running =
      0.5 * (t.disagreement2 + ctx.stubbornness * dev * dev + u * u);
  const double h = t.x * I;
  const double mu = -ctx.alpha * t.x - ctx.alpha * t.kernel.drift + t.x * u * u;
  return running + h * dl + 0.5 * h * ctx.sigma * ctx.sigma * dl +
         ctx.dlambda_ds * h + I * mu * dl;
}

namespace {

void require_case1(const ControlContext &ctx) {
  if (ctx.agent >= ctx.x.size())
    throw ParameterError("control context: agent index out of range");
  const double xi = ctx.xi();
  for (double xj : ctx.x)
    if (xj != xi)
      throw PreconditionError("Case-I formula requires all opinions equal");
  if (ctx.dlambda == 0.0)
    throw PreconditionError("Case-I formula requires a nonzero multiplier step");
}

double neighbor_weight_sum(const ControlContext &ctx) {
  double w = 0.0;
  for (const auto &nb : ctx.neighbors)
    w += nb.weight;
  return w;
}

} // namespace

QuadraticCoefficients case1_coefficients(const ControlContext &ctx) {
  const double exponent =
      -ctx.sigma * ctx.brownian + 0.5 * ctx.sigma * ctx.sigma * ctx.s;
  const double dl = ctx.dlambda;
  const double x = ctx.xi();
  const double anchor = neighbor_weight_sum(ctx) + ctx.stubbornness;
  const double e2 = std::exp(2.0 * exponent);
  const double t1 = 4.0 * e2 * dl * dl;
  const double t2 = -anchor * (1.0 + 2.0 * x * std::exp(exponent) * dl);
  const double t3 =
      4.0 * e2 * dl *
      (ctx.stubbornness * (x - ctx.x0) * std::exp(-exponent) + dl +
       ctx.dlambda_ds - ctx.alpha * dl);
  return {t1, t2, t3};
}

double sensitivity_case1_dxi(const ControlContext &ctx) {
  require_case1(ctx);
  const auto c = case1_coefficients(ctx);
  const auto sol = solve_feedback_quadratic(c);
  const double I = context_integrating_factor(ctx);
  const double dl = ctx.dlambda;
  const double dt2 = -2.0 * (neighbor_weight_sum(ctx) + ctx.stubbornness) * I * dl;
  const double dt3 = 4.0 * I * dl * ctx.stubbornness;
  const double u = sol.chosen;
  switch (sol.branch) {
  case RootBranch::clamped:
  case RootBranch::zero:
    return 0.0;
  case RootBranch::linear:
    return -(dt2 * u + dt3) / c.t2;
  case RootBranch::minus:
  case RootBranch::plus:
    break;
  }
  const double denom = 2.0 * c.t1 * u + c.t2;
  if (denom == 0.0)
    throw DomainError("Case-I sensitivity undefined at a double root");
  return -(dt2 * u + dt3) / denom;
}

double printed_case1_dxi(const ControlContext &ctx) {
  require_case1(ctx);
  const double I = context_integrating_factor(ctx);
  const double dl = ctx.dlambda;
  const double x = ctx.xi();
  const double anchor = neighbor_weight_sum(ctx) + ctx.stubbornness;
  const double g = 1.0 + 2.0 * x * I * dl;
  const double inner = ctx.stubbornness * (x - ctx.x0) / I + dl +
                       ctx.dlambda_ds - ctx.alpha * dl;
  const double dl3 = dl * dl * dl;
  const double brace =
      anchor * anchor * g * g - 64.0 * std::pow(I, 4) * dl3 * inner;
  if (!(brace > 0.0))
    throw DomainError("printed Case-I expression: braced term is not positive");
  const double t1 = 4.0 * I * I * dl * dl;
  return 2.0 / t1 * anchor * I * dl - 2.0 * std::pow(brace, -1.5) * I * g -
         64.0 * std::pow(I, 3) * dl3;
}

double printed_case1_dxi_reduced(const ControlContext &ctx) {
  require_case1(ctx);
  const double I = context_integrating_factor(ctx);
  const double dl = ctx.dlambda;
  const double g = 1.0 + 2.0 * ctx.xi() * I * dl;
  const double dl3 = dl * dl * dl;
  const double brace = -64.0 * std::pow(I, 4) * dl3 *
                       (dl + ctx.dlambda_ds - ctx.alpha * dl);
  if (!(brace > 0.0))
    throw DomainError("printed Case-I expression: braced term is not positive");
  return -2.0 * std::pow(brace, -1.5) * I * g - 64.0 * std::pow(I, 3) * dl3;
}

namespace {

const Neighbor &find_neighbor(const ControlContext &ctx, std::size_t probe) {
  for (const auto &nb : ctx.neighbors)
    if (nb.agent == probe)
      return nb;
  throw PreconditionError("agent " + std::to_string(probe) +
                          " is not a neighbor of agent " +
                          std::to_string(ctx.agent));
}

} // namespace

double sensitivity_case2_dxj(const ControlContext &ctx, std::size_t probe) {
  if (ctx.agent >= ctx.x.size())
    throw ParameterError("control context: agent index out of range");
  find_neighbor(ctx, probe);
  const double xi = ctx.xi();
  double inner = 0.0;
  double weight_sum = 0.0;
  for (const auto &nb : ctx.neighbors) {
    const double gap = ctx.x[nb.agent] - xi;
    if (!(gap > 0.0))
      throw PreconditionError("Case-II formula requires x_i < x_j for every "
                              "neighbor j");
    inner += nb.weight * std::pow(gap, -1.5);
    weight_sum += nb.weight;
  }
  if (ctx.dlambda < 0.0)
    throw DomainError("Case-II formula needs dlambda >= 0 for dlambda^(3/2)");
  const double I = context_integrating_factor(ctx);
  return -4.0 * inner * weight_sum * std::pow(I, 1.5) *
         std::pow(ctx.dlambda, 1.5);
}

double branch_derivative_dxj(const ControlContext &ctx, std::size_t probe) {
  if (ctx.agent >= ctx.x.size())
    throw ParameterError("control context: agent index out of range");
  const auto &nb = find_neighbor(ctx, probe);
  if (!(ctx.x[probe] > ctx.xi()))
    throw PreconditionError("branch derivative requires x_i < x_j");
  const auto c = coefficients(ctx);
  const auto sol = solve_feedback_quadratic(c);
  const double I = context_integrating_factor(ctx);
  // Only T3 depends on x_j: its disagreement term w_ij (x_i - x_j).
  const double dt3 = -4.0 * I * ctx.dlambda * nb.weight;
  switch (sol.branch) {
  case RootBranch::clamped:
  case RootBranch::zero:
    return 0.0;
  case RootBranch::linear:
    return -dt3 / c.t2;
  case RootBranch::minus:
  case RootBranch::plus:
    break;
  }
  const double denom = 2.0 * c.t1 * sol.chosen + c.t2;
  if (denom == 0.0)
    throw DomainError("branch derivative undefined at a double root");
  return -dt3 / denom;
}

OptimalPolicy::OptimalPolicy(std::shared_ptr<const Graph> graph,
                             MultiplierModel multiplier, bool keep_log)
    : graph_(std::move(graph)), multiplier_(std::move(multiplier)),
      log_(std::make_shared<std::vector<ControlLogEntry>>()),
      keep_log_(keep_log) {
  if (!graph_)
    throw ParameterError("optimal policy needs a graph");
}

void OptimalPolicy::operator()(const PolicyInput &in,
                               std::span<double> controls) {
  const auto &cfg = in.config;
  const std::size_t n = in.opinions.size();
  if (graph_->size() != n)
    throw ParameterError("optimal policy: graph size does not match state");
  const double alpha = cfg.alpha(in.time);
  const double dl = multiplier_.increment(in.time, in.eps);
  const double rate = multiplier_.rate(in.time);

  std::vector<ControlSolution> solved(n);
  std::vector<std::exception_ptr> failures(n);
  const auto count = static_cast<long>(n);
#pragma omp parallel for num_threads(cfg.workers) schedule(static)
  for (long idx = 0; idx < count; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    try {
      ControlContext ctx;
      ctx.s = in.time;
      ctx.eps = in.eps;
      ctx.agent = i;
      ctx.x = in.opinions;
      ctx.x0 = in.initial[i];
      ctx.brownian = in.brownian[i];
      ctx.sigma = cfg.sigma[i];
      ctx.alpha = alpha;
      ctx.neighbors = graph_->neighbors(i);
      ctx.stubbornness = graph_->stubbornness(i);
      ctx.kernel = cfg.kernel;
      ctx.dlambda = dl;
      ctx.dlambda_ds = rate;
      solved[i] = optimal_control(ctx);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  // Report the lowest failing agent so the error does not depend on threads.
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i])
      continue;
    std::string what;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception &e) {
      what = e.what();
    } catch (...) {
      what = "unknown error";
    }
    throw AgentControlError(i, failures[i], what);
  }
  for (std::size_t i = 0; i < n; ++i)
    controls[i] = solved[i].chosen;
  if (keep_log_) {
    for (std::size_t i = 0; i < n; ++i)
      log_->push_back({in.step, i, std::move(solved[i])});
  }
}

} // namespace mvfj
