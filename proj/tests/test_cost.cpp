#include "mvfj/cost.hpp"
#include "mvfj/error.hpp"
#include "mvfj/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace mvfj;

namespace {

SimConfig det_config(std::size_t n, double alpha, KernelParams kernel) {
  SimConfig c;
  c.n = n;
  c.horizon = 0.5;
  c.step = 0.01;
  c.sigma.assign(n, 0.0);
  c.alpha = DecaySchedule::constant(alpha);
  c.kernel = kernel;
  c.x0.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.x0[i] = (i + 0.5) / static_cast<double>(n);
  return c;
}

} // namespace

TEST_SUITE("cost") {

TEST_CASE("running cost") {
  const std::vector<Edge> e{{0, 1, 1.0}};
  const Graph g(2, e, {2.0, 0.0});
  const std::vector<double> x{0.8, 0.3}, x0{0.5, 0.3}, u{0.4, 0.0};
  CHECK(running_cost(g, x, x0, u, 0) == doctest::Approx(0.295).epsilon(1e-15));
  const std::vector<double> same{0.3, 0.3}, zero{0.0, 0.0};
  CHECK(running_cost(g, same, same, zero, 0) == 0.0);
  const Graph lone(1, {}, {0.0});
  const std::vector<double> one{0.5}, ua{0.3}, ub{0.6};
  CHECK(running_cost(lone, one, one, ub, 0) ==
        doctest::Approx(4.0 * running_cost(lone, one, one, ua, 0)));
  CHECK_THROWS_AS(running_cost(g, one, x0, u, 0), ParameterError);
}

TEST_CASE("total cost") {
  const std::vector<Edge> e{{0, 1, 1.0}, {1, 0, 0.5}};
  const Graph g(2, e, {1.0, 0.0});
  auto c = det_config(2, 1.0, {0.0, 0.0});
  const auto tr = simulate(c, g, constant_policy(0.3));
  const std::vector<Trajectory> one{tr};
  const auto rep = total_cost(one, g, 0);
  double direct = 0.0;
  for (std::size_t k = 0; k + 1 < tr.points(); ++k)
    direct += c.step * tr.step_costs(0, k);
  CHECK(rep.total == doctest::Approx(direct).epsilon(1e-12));
  CHECK(rep.total == doctest::Approx(0.5 * (rep.disagreement + rep.stubbornness + rep.effort)));
  CHECK(rep.effort == doctest::Approx(0.09 * 0.5).epsilon(1e-12));
  CHECK(rep.standard_error == 0.0);
  CHECK(rep.paths == 1);

  const std::vector<Trajectory> two{tr, tr};
  const auto rep2 = total_cost(two, g, 0);
  CHECK(rep2.standard_error == 0.0);
  CHECK(rep2.total == doctest::Approx(rep.total));

  CHECK_THROWS_AS(total_cost(std::vector<Trajectory>{}, g, 0), ParameterError);

  auto still = det_config(2, 0.0, {0.0, 0.0});
  still.x0 = {0.4, 0.4};
  const std::vector<Trajectory> flat{simulate(still, g, zero_policy())};
  const auto z = total_cost(flat, g, 1);
  CHECK(z.total == 0.0);
  CHECK(z.standard_error == 0.0);
}

TEST_CASE("total cost over noisy paths reports a standard error") {
  const std::vector<Edge> e{{0, 1, 1.0}, {1, 0, 1.0}};
  const Graph g(2, e, {1.0, 1.0});
  auto c = det_config(2, 1.0, {0.0, 0.0});
  c.sigma = {0.5, 0.5};
  std::vector<Trajectory> paths;
  for (std::uint64_t p = 0; p < 8; ++p) {
    c.seed = p;
    paths.push_back(simulate(c, g, zero_policy()));
  }
  const auto rep = total_cost(paths, g, 0);
  CHECK(rep.standard_error > 0.0);
  CHECK(rep.disagreement >= 0.0);
  CHECK(rep.stubbornness >= 0.0);
  CHECK(rep.effort == 0.0);
}

TEST_CASE("variational step") {
  const auto c0 = variational_coefficients(0.5, 0.0, 0.0, 0.0);
  CHECK(variational_step(0.0, 0.0, c0, 0.1, 0.3) == 0.0);
  CHECK(variational_step(0.0, 1.0, c0, 0.1, 0.0) == 0.0);
  const auto c1 = variational_coefficients(0.5, 0.0, 1.0, 0.0);
  CHECK(variational_step(1.0, 0.0, c1, 0.1, 0.0) == doctest::Approx(0.9).epsilon(1e-15));
  const auto c2 = variational_coefficients(0.4, 0.3, 1.0, 0.2, 0.5);
  CHECK(c2.dmu_dx == doctest::Approx(-1.0 - 0.5 + 0.09));
  CHECK(c2.dmu_du == doctest::Approx(0.24));
  CHECK(c2.dsigma_dx == 0.2);
  CHECK(c2.dsigma_du == 0.0);
}

TEST_CASE("variational step is linear") {
  const CounterRng rng(6);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto c = variational_coefficients(rng.uniform(RngStream::brownian, t, 0),
                                            rng.uniform(RngStream::brownian, t, 1), 1.0,
                                            0.3, rng.uniform(RngStream::brownian, t, 2));
    const double dw = 0.1 * rng.normal(RngStream::brownian, t, 3);
    const double v1 = rng.normal(RngStream::brownian, t, 4), d1 = rng.normal(RngStream::brownian, t, 5);
    const double v2 = rng.normal(RngStream::brownian, t, 6), d2 = rng.normal(RngStream::brownian, t, 7);
    const double a = 1.7, b = -0.4;
    CHECK(variational_step(a * v1 + b * v2, a * d1 + b * d2, c, 0.01, dw) ==
          doctest::Approx(a * variational_step(v1, d1, c, 0.01, dw) +
                          b * variational_step(v2, d2, c, 0.01, dw))
              .epsilon(1e-12));
  }
}

TEST_CASE("Gateaux derivative") {
  const Graph lone(3, {}, std::vector<double>(3, 0.0));
  auto c = det_config(3, 1.0, {0.0, 0.0});
  const auto tr = simulate(c, lone, zero_policy());
  const std::size_t steps = c.steps();
  const std::vector<double> u(steps, 0.6), v(steps, 0.25), none(steps, 0.0);

  const auto one = gateaux_derivative(c, lone, tr.opinions, u, v, {1, 10, 11}, 1);
  CHECK(one.analytic == doctest::Approx(0.6 * 0.25 * c.step).epsilon(1e-14));

  const auto zero = gateaux_derivative(c, lone, tr.opinions, u, none, {1, 0, steps}, 1);
  CHECK(zero.analytic == 0.0);
  CHECK(zero.finite_difference == 0.0);

  const std::vector<Edge> e{{0, 1, 1.0}, {0, 2, 0.5}, {1, 0, 1.0}};
  const Graph g(3, e, {2.0, 0.0, 0.0});
  c.kernel = {3.0, 0.0};
  const auto frozen = simulate(c, g, constant_policy(0.2)).opinions;
  const auto r = gateaux_derivative(c, g, frozen, u, v, {0, 5, 40}, 1);
  CHECK(r.analytic == doctest::Approx(r.finite_difference).epsilon(1e-6));

  CHECK_THROWS_AS(gateaux_derivative(c, g, frozen, u, v, {0, 5, 5}, 1), ParameterError);
  CHECK_THROWS_AS(gateaux_derivative(c, g, frozen, u, v, {0, 0, 5}, 0), ParameterError);
}

TEST_CASE("Gateaux derivative with noise agrees within Monte-Carlo error") {
  const std::vector<Edge> e{{0, 1, 1.0}, {1, 0, 1.0}};
  const Graph g(2, e, {1.0, 0.0});
  auto c = det_config(2, 1.0, {2.0, 0.0});
  c.sigma = {0.3, 0.3};
  c.seed = 4;
  const auto frozen = simulate(c, g, zero_policy()).opinions;
  const std::vector<double> u(c.steps(), 0.4), v(c.steps(), 1.0);
  const auto r = gateaux_derivative(c, g, frozen, u, v, {0, 10, 30}, 200);
  CHECK(r.analytic_standard_error > 0.0);
  // Common random numbers: the only gap is the O(dt) discretisation bias.
  CHECK(std::abs(r.analytic - r.finite_difference) <
        3.0 * r.analytic_standard_error + 1e-3 * std::abs(r.analytic));
}

}
