#include "mvfj/dynamics.hpp"
#include "mvfj/error.hpp"
#include "mvfj/graph.hpp"
#include "mvfj/measure.hpp"
#include "mvfj/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace mvfj;

namespace {

SimConfig config(std::size_t n, double sigma, double alpha, KernelParams kernel,
                 double horizon = 1.0, double step = 0.01) {
  SimConfig c;
  c.n = n;
  c.horizon = horizon;
  c.step = step;
  c.sigma.assign(n, sigma);
  c.alpha = DecaySchedule::constant(alpha);
  c.kernel = kernel;
  c.seed = 17;
  const CounterRng rng(99);
  c.x0.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.x0[i] = rng.uniform(RngStream::initial_opinions, i, 0);
  return c;
}

Graph empty_graph(std::size_t n) { return Graph(n, {}, std::vector<double>(n, 0.0)); }

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("single Euler step examples") {
  auto c = config(1, 0.0, 1.0, {0.0, 0.0}, 1.0, 0.1);
  const std::vector<double> x{0.8}, u0{0.0}, dw{0.0};
  CHECK(step(x, u0, c, 0.0, dw)[0] == doctest::Approx(0.72).epsilon(1e-15));

  c.alpha = DecaySchedule::constant(0.0);
  const std::vector<double> x2{0.4}, u{0.5};
  CHECK(step(x2, u, c, 0.0, dw)[0] == doctest::Approx(0.41).epsilon(1e-15));
  CHECK(step(x2, u0, c, 0.0, dw)[0] == 0.4);
  CHECK_THROWS_AS(step(x2, std::vector<double>{0.0, 0.0}, c, 0.0, dw), ParameterError);
}

TEST_CASE("update is simultaneous") {
  auto c = config(2, 0.0, 1.0, {3.0, 0.0}, 1.0, 0.1);
  const std::vector<double> x{0.8, 0.3}, u{0.0, 0.0}, dw{0.0, 0.0};
  const auto y = step(x, u, c, 0.0, dw);
  const double drift0 = -0.8 - mean_field_drift(c.kernel, 0, x);
  const double drift1 = -0.3 - mean_field_drift(c.kernel, 1, x);
  CHECK(y[0] == doctest::Approx(0.8 + 0.1 * drift0).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.3 + 0.1 * drift1).epsilon(1e-15));
}

TEST_CASE("decay schedule interpolates") {
  const auto d = DecaySchedule::table({{0.0, 1.0}, {1.0, 3.0}});
  CHECK(d(-1.0) == 1.0);
  CHECK(d(0.25) == doctest::Approx(1.5));
  CHECK(d(2.0) == 3.0);
  CHECK_THROWS_AS(DecaySchedule::table({{0.0, 1.0}, {0.0, 2.0}}), ParameterError);
  CHECK_THROWS_AS(DecaySchedule::table({}), ParameterError);
}

TEST_CASE("config validation") {
  auto c = config(3, 0.1, 1.0, {1.0, 0.0});
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.step = 2.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.step = 0.3;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.x0[1] = 1.2;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.sigma[0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.sigma.pop_back();
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("integrating factor") {
  CHECK(integrating_factor(0.0, 3.7, 2.0) == 1.0);
  CHECK(integrating_factor(1.0, 0.0, 2.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(integrating_factor(0.5, 1.2, 1.0) == doctest::Approx(std::exp(-0.475)).epsilon(1e-15));
  CHECK(integrating_factor(0.5, 1.2, 1.0) == doctest::Approx(0.6218851).epsilon(1e-7));
}

TEST_CASE("no drift and no noise keeps x0") {
  const auto c = config(5, 0.0, 0.0, {2.0, 0.0});
  const auto tr = simulate(c, empty_graph(5), zero_policy());
  // kernel still acts through alpha = 0, so nothing moves
  for (std::size_t k = 0; k < tr.points(); ++k)
    for (std::size_t i = 0; i < 5; ++i)
      REQUIRE(tr.opinions(i, k) == c.x0[i]);
  CHECK(tr.points() == 101);
  CHECK(tr.times.back() == doctest::Approx(1.0));
}

TEST_CASE("trajectory shape and brownian bookkeeping") {
  const auto c = config(7, 0.3, 1.0, {2.0, 0.1});
  const auto tr = simulate(c, empty_graph(7), constant_policy(0.2));
  CHECK(tr.controls.points() == tr.points());
  CHECK(tr.brownian.points() == tr.points());
  CHECK(tr.step_costs.points() == tr.points());
  for (std::size_t k = 1; k < tr.points(); ++k)
    REQUIRE(tr.times[k] > tr.times[k - 1]);
  const CounterRng rng(c.seed);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(tr.brownian(i, 0) == 0.0);
    for (std::size_t k = 0; k + 1 < tr.points(); ++k) {
      const double dw = tr.brownian(i, k + 1) - tr.brownian(i, k);
      REQUIRE(dw == doctest::Approx(std::sqrt(c.step) *
                                    rng.normal(RngStream::brownian, i, k))
                        .epsilon(1e-12));
      // The stored path reproduces the Euler step exactly.
      const std::vector<double> x(tr.opinions.at(k).begin(), tr.opinions.at(k).end());
      const std::vector<double> u(tr.controls.at(k).begin(), tr.controls.at(k).end());
      std::vector<double> dws(7);
      for (std::size_t j = 0; j < 7; ++j)
        dws[j] = tr.brownian(j, k + 1) - tr.brownian(j, k);
      REQUIRE(step(x, u, c, tr.times[k], dws)[i] == tr.opinions(i, k + 1));
    }
  }
}

TEST_CASE("zero noise is seed independent") {
  auto c = config(10, 0.0, 1.0, {3.0, 0.0});
  const auto a = simulate(c, empty_graph(10), zero_policy());
  c.seed = 12345;
  const auto b = simulate(c, empty_graph(10), zero_policy());
  CHECK(a.opinions == b.opinions);
}

TEST_CASE("worker count does not change results") {
  auto c = config(64, 0.2, 1.0, {4.0, 0.1});
  const auto g = build_erdos_renyi(64, 0.1, 1.0, 0.3, 5);
  const auto a = simulate(c, g, constant_policy(0.3));
  c.workers = 4;
  const auto b = simulate(c, g, constant_policy(0.3));
  CHECK(a == b);
}

TEST_CASE("clamping keeps opinions in the unit interval") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = config(20, 1.5, 0.5, {2.0, 0.0});
    c.seed = seed;
    c.clamp = true;
    const auto tr = simulate(c, empty_graph(20), constant_policy(2.0));
    for (std::size_t k = 0; k < tr.points(); ++k)
      for (std::size_t i = 0; i < 20; ++i) {
        REQUIRE(tr.opinions(i, k) >= 0.0);
        REQUIRE(tr.opinions(i, k) <= 1.0);
      }
    CHECK(tr.out_of_range > 0);
  }
}

TEST_CASE("policy failures carry the step") {
  const auto c = config(3, 0.0, 1.0, {0.0, 0.0});
  const Policy failing = [](const PolicyInput &in, std::span<double> u) {
    if (in.step == 4)
      throw std::runtime_error("boom");
    std::fill(u.begin(), u.end(), 0.0);
  };
  try {
    simulate(c, empty_graph(3), failing);
    FAIL("expected PolicyError");
  } catch (const PolicyError &e) {
    CHECK(e.step() == 4);
    CHECK_THROWS_AS(std::rethrow_exception(e.cause()), std::runtime_error);
  }
}

TEST_CASE("attractive regime contracts the opinion spread") {
  const auto c = config(100, 0.05, 1.0, {5.0, 0.0});
  const auto tr = simulate(c, empty_graph(100), zero_policy());
  CHECK(sample_standard_deviation(tr.opinions.at(tr.points() - 1)) <
        sample_standard_deviation(tr.opinions.at(0)));
}

TEST_CASE("picard iteration") {
  SUBCASE("no interaction converges at once") {
    const auto c = config(20, 0.1, 1.0, {0.0, 0.0});
    const auto r = picard_law_iteration(c, empty_graph(20), zero_policy(), 1e-12, 5);
    CHECK(r.converged);
    REQUIRE(r.terminal_w2.size() == 1);
    CHECK(r.terminal_w2[0] == 0.0);
  }
  SUBCASE("deterministic small coupling contracts") {
    const auto c = config(50, 0.0, 1.0, {1.0, 0.0});
    const auto r = picard_law_iteration(c, empty_graph(50), zero_policy(), 1e-14, 4);
    REQUIRE(r.terminal_w2.size() >= 3);
    for (std::size_t m = 1; m < r.terminal_w2.size(); ++m)
      CHECK(r.terminal_w2[m] < r.terminal_w2[m - 1]);
  }
  SUBCASE("budget exhausted") {
    const auto c = config(20, 0.0, 1.0, {3.0, 0.0});
    const auto r = picard_law_iteration(c, empty_graph(20), zero_policy(), 1e-6, 1);
    CHECK_FALSE(r.converged);
    CHECK(r.terminal_w2.size() == 1);
    CHECK(r.sup_w2.size() == 1);
  }
  CHECK_THROWS_AS(picard_law_iteration(config(2, 0, 1, {}), empty_graph(2),
                                       zero_policy(), 0.0, 3),
                  ParameterError);
}

}
