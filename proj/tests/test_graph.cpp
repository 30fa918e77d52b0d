#include "mvfj/error.hpp"
#include "mvfj/graph.hpp"
#include "mvfj/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace mvfj;

namespace {

std::filesystem::path write_tmp(const std::string &name, const std::string &text) {
  const std::filesystem::path dir = std::filesystem::path(MVFJ_TEST_TMP) / "graph";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

void check_invariants(const Graph &g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    REQUIRE(g.stubbornness(i) >= 0.0);
    std::size_t prev = 0;
    bool first = true;
    for (const auto &nb : g.neighbors(i)) {
      REQUIRE(nb.agent != i);
      REQUIRE(nb.agent < g.size());
      REQUIRE(nb.weight > 0.0);
      if (!first)
        REQUIRE(nb.agent > prev);
      prev = nb.agent;
      first = false;
    }
  }
}

} // namespace

TEST_SUITE("graph") {

TEST_CASE("erdos-renyi extremes") {
  CHECK(build_erdos_renyi(5, 0.0, 1.0, 0.0, 7).undirected_edge_count() == 0);
  const auto full = build_erdos_renyi(4, 1.0, 1.0, 0.0, 7);
  CHECK(full.undirected_edge_count() == 6);
  CHECK(full.directed_edge_count() == 12);
  CHECK(full.weight(0, 3) == 1.0);
  CHECK(full.weight_sum(2) == 3.0);
}

TEST_CASE("erdos-renyi is a function of the seed") {
  const auto a = build_erdos_renyi(50, 0.2, 1.0, 0.5, 42);
  const auto b = build_erdos_renyi(50, 0.2, 1.0, 0.5, 42);
  const auto c = build_erdos_renyi(50, 0.2, 1.0, 0.5, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(a.stubbornness(i) == 0.5);
    for (const auto &nb : a.neighbors(i))
      CHECK(a.weight(nb.agent, i) == nb.weight);
  }
}

TEST_CASE("erdos-renyi rejects bad parameters") {
  CHECK_THROWS_AS(build_erdos_renyi(0, 0.5, 1.0, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(build_erdos_renyi(5, 1.5, 1.0, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(build_erdos_renyi(5, -0.1, 1.0, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(build_erdos_renyi(5, 0.5, -1.0, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(build_erdos_renyi(5, 0.5, 1.0, -2.0, 1), ParameterError);
}

TEST_CASE("clustered generator") {
  GraphSpec s;
  s.kind = GraphKind::clustered;
  s.n = 10;
  s.clusters = 1;
  s.p_in = 1.0;
  s.default_k = 0.25;
  const auto complete = build_clustered(s);
  CHECK(complete.undirected_edge_count() == 45);
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(complete.stubbornness(i) == 0.25);

  s.clusters = 2;
  s.p_in = 0.0;
  CHECK(build_clustered(s).undirected_edge_count() == 0);

  s.clusters = 11;
  CHECK_THROWS_AS(build_clustered(s), ParameterError);
}

TEST_CASE("clustered generator picks floor(f n) stubborn agents") {
  GraphSpec s;
  s.kind = GraphKind::clustered;
  s.n = 120;
  s.clusters = 3;
  s.p_in = 0.3;
  s.p_out = 0.02;
  s.stubborn_fraction = 0.1;
  s.stubborn_k = 10.0;
  s.default_k = 0.0;
  s.seed = 9;
  const auto g = build_clustered(s);
  std::size_t stubborn = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    stubborn += g.stubbornness(i) == 10.0;
  CHECK(stubborn == 12);
  CHECK(g == build_clustered(s));
  check_invariants(g);

  // intra-cluster density dominates
  const auto cl = cluster_assignment(120, 3);
  std::size_t in = 0, out = 0;
  for (std::size_t i = 0; i < 120; ++i)
    for (const auto &nb : g.neighbors(i))
      (cl[i] == cl[nb.agent] ? in : out) += 1;
  CHECK(in > 5 * out);
}

TEST_CASE("cluster assignment is contiguous and balanced") {
  const auto cl = cluster_assignment(10, 3);
  CHECK(cl == std::vector<std::size_t>{0, 0, 0, 0, 1, 1, 1, 2, 2, 2});
}

TEST_CASE("generated graphs satisfy the invariants for random specs") {
  const CounterRng rng(2024);
  for (std::uint64_t t = 0; t < 100; ++t) {
    GraphSpec s;
    s.n = 1 + rng.below(RngStream::graph_edges, t, 0, 40);
    s.kind = rng.uniform(RngStream::graph_edges, t, 1) < 0.5 ? GraphKind::erdos_renyi
                                                             : GraphKind::clustered;
    s.edge_probability = rng.uniform(RngStream::graph_edges, t, 2);
    s.clusters = 1 + rng.below(RngStream::graph_edges, t, 3, s.n);
    s.p_in = rng.uniform(RngStream::graph_edges, t, 4);
    s.p_out = rng.uniform(RngStream::graph_edges, t, 5);
    s.stubborn_fraction = rng.uniform(RngStream::graph_edges, t, 6);
    s.stubborn_k = 3.0;
    s.default_k = 0.5;
    s.default_weight = 2.0 * rng.uniform(RngStream::graph_edges, t, 7);
    s.seed = t;
    const auto g = build_graph(s);
    REQUIRE(g.size() == s.n);
    check_invariants(g);
  }
}

TEST_CASE("graph constructor validation") {
  const std::vector<Edge> loop{{0, 0, 1.0}};
  CHECK_THROWS_AS(Graph(2, loop, {0, 0}), ParameterError);
  const std::vector<Edge> dup{{0, 1, 1.0}, {0, 1, 2.0}};
  CHECK_THROWS_AS(Graph(2, dup, {0, 0}), ParameterError);
  const std::vector<Edge> neg{{0, 1, -1.0}};
  CHECK_THROWS_AS(Graph(2, neg, {0, 0}), ParameterError);
  const std::vector<Edge> range{{0, 2, 1.0}};
  CHECK_THROWS_AS(Graph(2, range, {0, 0}), ParameterError);
  CHECK_THROWS_AS(Graph(2, {}, {0, -1}), ParameterError);
  CHECK_THROWS_AS(Graph(0, {}, {}), ParameterError);

  const std::vector<Edge> ok{{1, 0, 0.5}, {0, 1, 0.0}};
  const Graph g(2, ok, {0, 1});
  CHECK(g.neighbors(0).empty());
  CHECK(g.weight(1, 0) == 0.5);
  CHECK(g.undirected_edge_count() == 1);
  CHECK(g.directed_edge_count() == 1);
}

TEST_CASE("explicit graph files") {
  const auto edges = write_tmp("edges.csv", "i,j,w\n0,1,0.5\r\n1,0,0.25\n\n2,1,1\n");
  const auto nodes = write_tmp("nodes.csv", "i,k\n1,0\n0,2\n2,0.5\n");
  const auto g = load_graph_csv(edges, nodes);
  CHECK(g.size() == 3);
  CHECK(g.weight(0, 1) == 0.5);
  CHECK(g.weight(1, 0) == 0.25);
  CHECK(g.weight(2, 1) == 1.0);
  CHECK(g.stubbornness(0) == 2.0);

  const auto bad = write_tmp("bad.csv", "i,j,w\n0,1,0.5\n0,x,1\n");
  try {
    load_graph_csv(bad, nodes);
    FAIL("expected ParameterError");
  } catch (const ParameterError &e) {
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }
  const auto gap = write_tmp("gap.csv", "i,k\n0,0\n2,0\n");
  CHECK_THROWS_AS(load_graph_csv(edges, gap), ParameterError);
  CHECK_THROWS_AS(load_graph_csv(edges, "/nonexistent/nodes.csv"), ParameterError);
}

TEST_CASE("radius neighborhood") {
  using V = std::vector<std::size_t>;
  const std::vector<double> a{0.5, 0.5, 0.5};
  CHECK(radius_neighborhood(a, 0, 0.0) == V{1, 2});
  const std::vector<double> b{0.0, 1.0};
  CHECK(radius_neighborhood(b, 0, 0.5).empty());
  const std::vector<double> c{0.2, 0.3, 0.9};
  CHECK(radius_neighborhood(c, 0, 0.04) == V{1});
  CHECK_THROWS_AS(radius_neighborhood(c, 3, 0.04), ParameterError);
  CHECK_THROWS_AS(radius_neighborhood(c, 0, -1.0), ParameterError);
}

}
