#include "mvfj/graph.hpp"

#include "mvfj/csv.hpp"
#include "mvfj/error.hpp"
#include "mvfj/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mvfj {

namespace {

void require_probability(double p, const char *name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError(std::string(name) + " must lie in [0, 1], got " +
                         std::to_string(p));
}

void require_nonnegative(double v, const char *name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ParameterError(std::string(name) +
                         " must be finite and >= 0, got " + std::to_string(v));
}

// Pair {i, j} with i < j maps to a unique counter; the draw is independent of
// enumeration order.
double pair_uniform(const CounterRng &rng, std::size_t i, std::size_t j) {
  return rng.uniform(RngStream::graph_edges, i, j);
}

std::vector<Edge> symmetric_edges(std::size_t n, double w,
                                  const CounterRng &rng, auto &&probability) {
  std::vector<Edge> edges;
  if (w == 0.0)
    return edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = probability(i, j);
      // p == 1 must link with certainty; uniform() is in (0, 1).
      if (p > 0.0 && pair_uniform(rng, i, j) < p) {
        edges.push_back({i, j, w});
        edges.push_back({j, i, w});
      }
    }
  }
  return edges;
}

} // namespace

Graph::Graph(std::size_t n, std::span<const Edge> edges,
             std::vector<double> stubbornness)
    : rows_(n), stubbornness_(std::move(stubbornness)) {
  if (n == 0)
    throw ParameterError("graph must have at least one agent");
  if (stubbornness_.size() != n)
    throw ParameterError("stubbornness vector has " +
                         std::to_string(stubbornness_.size()) +
                         " entries, expected " + std::to_string(n));
  for (double k : stubbornness_)
    require_nonnegative(k, "stubbornness");

  for (const auto &e : edges) {
    if (e.i >= n || e.j >= n)
      throw ParameterError("edge (" + std::to_string(e.i) + "," +
                           std::to_string(e.j) + ") out of range for n=" +
                           std::to_string(n));
    if (e.i == e.j)
      throw ParameterError("self-loop on agent " + std::to_string(e.i));
    require_nonnegative(e.weight, "edge weight");
    if (e.weight > 0.0)
      rows_[e.i].push_back({e.j, e.weight});
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto &row = rows_[i];
    std::sort(row.begin(), row.end(),
              [](const Neighbor &a, const Neighbor &b) { return a.agent < b.agent; });
    const auto dup = std::adjacent_find(
        row.begin(), row.end(),
        [](const Neighbor &a, const Neighbor &b) { return a.agent == b.agent; });
    if (dup != row.end())
      throw ParameterError("duplicate edge (" + std::to_string(i) + "," +
                           std::to_string(dup->agent) + ")");
  }
}

std::span<const Neighbor> Graph::neighbors(std::size_t i) const {
  return rows_.at(i);
}

double Graph::weight(std::size_t i, std::size_t j) const {
  const auto &row = rows_.at(i);
  const auto it = std::lower_bound(
      row.begin(), row.end(), j,
      [](const Neighbor &nb, std::size_t key) { return nb.agent < key; });
  return (it != row.end() && it->agent == j) ? it->weight : 0.0;
}

double Graph::weight_sum(std::size_t i) const {
  double s = 0.0;
  for (const auto &nb : rows_.at(i))
    s += nb.weight;
  return s;
}

std::size_t Graph::directed_edge_count() const noexcept {
  std::size_t c = 0;
  for (const auto &row : rows_)
    c += row.size();
  return c;
}

std::size_t Graph::undirected_edge_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto &nb : rows_[i]) {
      if (nb.agent > i || weight(nb.agent, i) == 0.0)
        ++c;
    }
  }
  return c;
}

void GraphSpec::validate() const {
  if (n == 0)
    throw ParameterError("n must be >= 1");
  require_probability(edge_probability, "edge probability");
  require_probability(p_in, "p_in");
  require_probability(p_out, "p_out");
  require_probability(stubborn_fraction, "stubborn fraction");
  require_nonnegative(stubborn_k, "stubborn k");
  require_nonnegative(default_k, "default k");
  require_nonnegative(default_weight, "default weight");
  if (clusters == 0 || clusters > n)
    throw ParameterError("cluster count must lie in [1, n], got " +
                         std::to_string(clusters));
}

Graph build_erdos_renyi(std::size_t n, double p, double w, double k,
                        std::uint64_t seed) {
  if (n == 0)
    throw ParameterError("n must be >= 1");
  require_probability(p, "edge probability");
  require_nonnegative(w, "weight");
  require_nonnegative(k, "stubbornness");
  const CounterRng rng(seed);
  const auto edges =
      symmetric_edges(n, w, rng, [p](std::size_t, std::size_t) { return p; });
  return Graph(n, edges, std::vector<double>(n, k));
}

std::vector<std::size_t> cluster_assignment(std::size_t n,
                                            std::size_t clusters) {
  if (clusters == 0 || clusters > n)
    throw ParameterError("cluster count must lie in [1, n]");
  std::vector<std::size_t> out(n);
  const std::size_t base = n / clusters;
  const std::size_t extra = n % clusters;
  std::size_t agent = 0;
  for (std::size_t c = 0; c < clusters; ++c) {
    const std::size_t size = base + (c < extra ? 1 : 0);
    for (std::size_t m = 0; m < size; ++m)
      out[agent++] = c;
  }
  return out;
}

Graph build_clustered(const GraphSpec &spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  const auto cluster = cluster_assignment(spec.n, spec.clusters);
  const auto edges = symmetric_edges(
      spec.n, spec.default_weight, rng, [&](std::size_t i, std::size_t j) {
        return cluster[i] == cluster[j] ? spec.p_in : spec.p_out;
      });

  // Fisher-Yates with counter-indexed draws; the first floor(f*n) entries of
  // the permutation are stubborn.
  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t m = spec.n; m > 1; --m) {
    const auto pick = rng.below(RngStream::graph_stubborn, m, 0, m);
    std::swap(order[m - 1], order[pick]);
  }
  const auto stubborn_count = static_cast<std::size_t>(
      std::floor(spec.stubborn_fraction * static_cast<double>(spec.n)));
  std::vector<double> k(spec.n, spec.default_k);
  for (std::size_t m = 0; m < stubborn_count; ++m)
    k[order[m]] = spec.stubborn_k;
  return Graph(spec.n, edges, std::move(k));
}

Graph build_graph(const GraphSpec &spec) {
  switch (spec.kind) {
  case GraphKind::erdos_renyi:
    spec.validate();
    return build_erdos_renyi(spec.n, spec.edge_probability, spec.default_weight,
                             spec.default_k, spec.seed);
  case GraphKind::clustered:
    return build_clustered(spec);
  case GraphKind::explicit_lists:
    break;
  }
  throw ParameterError("explicit graphs are loaded from CSV edge/node lists");
}

namespace {

std::size_t as_index(double v, const std::string &where) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
    throw ParameterError(where + ": index must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

} // namespace

Graph load_graph_csv(const std::filesystem::path &edges_path,
                     const std::filesystem::path &nodes_path) {
  const auto nodes = csv::read_numeric(nodes_path, 2);
  const std::size_t n = nodes.rows.size();
  if (n == 0)
    throw ParameterError(nodes_path.string() + ": no agents listed");
  std::vector<double> k(n, 0.0);
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const auto where =
        nodes_path.string() + ":" + std::to_string(nodes.line_numbers[r]);
    const auto i = as_index(nodes.rows[r][0], where);
    if (i >= n)
      throw ParameterError(where + ": agent index " + std::to_string(i) +
                           " >= agent count " + std::to_string(n));
    if (seen[i])
      throw ParameterError(where + ": agent " + std::to_string(i) +
                           " listed twice");
    seen[i] = true;
    k[i] = nodes.rows[r][1];
    if (!(k[i] >= 0.0) || !std::isfinite(k[i]))
      throw ParameterError(where + ": stubbornness must be finite and >= 0");
  }

  const auto table = csv::read_numeric(edges_path, 3);
  std::vector<Edge> edges;
  edges.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto where =
        edges_path.string() + ":" + std::to_string(table.line_numbers[r]);
    const auto i = as_index(table.rows[r][0], where);
    const auto j = as_index(table.rows[r][1], where);
    if (i >= n || j >= n)
      throw ParameterError(where + ": agent index out of range for n=" +
                           std::to_string(n));
    edges.push_back({i, j, table.rows[r][2]});
  }
  return Graph(n, edges, std::move(k));
}

std::vector<std::size_t> radius_neighborhood(std::span<const double> x,
                                             std::size_t i, double r) {
  if (i >= x.size())
    throw ParameterError("agent index out of range");
  if (!(r >= 0.0))
    throw ParameterError("radius must be >= 0");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i)
      continue;
    const double d = x[i] - x[j];
    if (d * d <= r)
      out.push_back(j);
  }
  return out;
}

} // namespace mvfj
