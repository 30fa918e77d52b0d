#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mvfj {

/// Directed influence of `agent` on the row owner: w_ij with j = agent.
struct Neighbor {
  std::size_t agent;
  double weight;

  friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

/// Directed weighted edge i <- j carrying w_ij.
struct Edge {
  std::size_t i;
  std::size_t j;
  double weight;
};

/// Weighted social network with per-agent stubbornness.
///
/// Row i lists exactly the agents j with w_ij > 0 (the neighbor set of i),
/// sorted by index. Edges given with weight 0 are dropped. Immutable after
/// construction.
class Graph {
public:
  /// Throws ParameterError on n == 0, self-loops, out-of-range indices,
  /// duplicate (i, j) pairs, negative or non-finite weights/stubbornness.
  Graph(std::size_t n, std::span<const Edge> edges,
        std::vector<double> stubbornness);

  std::size_t size() const noexcept { return stubbornness_.size(); }

  std::span<const Neighbor> neighbors(std::size_t i) const;
  double stubbornness(std::size_t i) const { return stubbornness_.at(i); }
  std::span<const double> stubbornness() const noexcept { return stubbornness_; }

  /// w_ij, or 0 when j is not a neighbor of i.
  double weight(std::size_t i, std::size_t j) const;

  /// Sum of w_ij over the neighbors of i.
  double weight_sum(std::size_t i) const;

  std::size_t directed_edge_count() const noexcept;

  /// Number of unordered pairs {i, j} connected in at least one direction.
  std::size_t undirected_edge_count() const;

  friend bool operator==(const Graph &, const Graph &) = default;

private:
  std::vector<std::vector<Neighbor>> rows_;
  std::vector<double> stubbornness_;
};

enum class GraphKind { erdos_renyi, clustered, explicit_lists };

/// Parameters of the random generators.
struct GraphSpec {
  GraphKind kind = GraphKind::erdos_renyi;
  std::size_t n = 1;
  double edge_probability = 0.0;
  std::size_t clusters = 1;
  double p_in = 0.0;
  double p_out = 0.0;
  double stubborn_fraction = 0.0;
  double stubborn_k = 0.0;
  double default_k = 0.0;
  double default_weight = 1.0;
  std::uint64_t seed = 0;

  /// Throws ParameterError on any out-of-range field.
  void validate() const;
};

/// Each unordered pair linked independently with probability p; linked pairs
/// get weight w in both directions and every agent gets stubbornness k.
Graph build_erdos_renyi(std::size_t n, double p, double w, double k,
                        std::uint64_t seed);

/// Near-equal contiguous clusters (sizes differ by at most one), intra-cluster
/// pairs linked with p_in and inter-cluster pairs with p_out. Exactly
/// floor(stubborn_fraction * n) agents, picked by a seeded shuffle, receive
/// stubborn_k; the rest receive default_k.
Graph build_clustered(const GraphSpec &spec);

/// Dispatch on spec.kind; explicit graphs must be loaded with load_graph_csv.
Graph build_graph(const GraphSpec &spec);

/// Cluster index of each agent under build_clustered's partition.
std::vector<std::size_t> cluster_assignment(std::size_t n, std::size_t clusters);

/// Loads `i,j,w_ij` edges and `i,k_i` nodes (0-based, header row required).
/// Agent count is the number of node rows; every index 0..n-1 must appear
/// exactly once in the node file.
Graph load_graph_csv(const std::filesystem::path &edges,
                     const std::filesystem::path &nodes);

/// { j != i : (x_i - x_j)^2 <= r }, ascending.
std::vector<std::size_t> radius_neighborhood(std::span<const double> x,
                                             std::size_t i, double r);

} // namespace mvfj
