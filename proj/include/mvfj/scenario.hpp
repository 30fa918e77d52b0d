#pragma once

#include "mvfj/control.hpp"
#include "mvfj/cost.hpp"
#include "mvfj/dynamics.hpp"
#include "mvfj/error.hpp"
#include "mvfj/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvfj {

/// Scenario file problem. `where` is a JSON pointer, or `line:column` for
/// syntax errors.
class ScenarioError : public ParameterError {
public:
  ScenarioError(std::string where, const std::string &message);
  const std::string &where() const noexcept { return where_; }

private:
  std::string where_;
};

enum class PolicyKind { zero, constant, optimal };

struct GraphSource {
  GraphSpec spec;
  std::filesystem::path edges; ///< explicit graphs only
  std::filesystem::path nodes;
};

struct InitialOpinions {
  bool uniform = true;
  double low = 0.0;
  double high = 1.0;
  std::vector<double> values;
};

struct KdeRequest {
  std::vector<double> times;
  double grid_min = -0.25;
  double grid_max = 1.25;
  std::size_t points = 301;
  std::optional<double> bandwidth; ///< Silverman's rule when absent
};

struct PicardRequest {
  double tol = 1e-6;
  std::size_t max_iter = 10;
};

enum class SensitivityRegime { case1, case2 };

/// Base point of a sensitivity sweep: agent 0 with `agents - 1` neighbors of
/// weight w. Case I puts every agent at x_i; Case II puts neighbors at x_j.
struct SensitivityRequest {
  SensitivityRegime regime = SensitivityRegime::case1;
  std::string param = "x_i";
  std::vector<double> values;
  std::size_t agents = 2;
  double x_i = 0.4;
  double x_j = 0.6;
  double x0 = 0.3;
  double w = 1.0;
  double k = 0.5;
  double sigma = 0.1;
  double brownian = 0.0;
  double s = 0.5;
  double alpha = 1.0;
  double step = 0.01;
  double dlambda_ds = 1.0;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  GraphSource graph;
  SimConfig sim;
  InitialOpinions x0;
  std::optional<MultiplierModel> multiplier;
  PolicyKind policy = PolicyKind::zero;
  double constant_control = 0.0;

  bool write_trajectories = true;
  bool write_controls = false;
  bool write_costs = true;
  std::size_t cost_paths = 1;
  std::optional<KdeRequest> kde;
  std::optional<PicardRequest> picard;
  std::optional<SensitivityRequest> sensitivity;

  /// Fill sim.x0, sim.seed and graph seed from the scenario seed. Called by
  /// parse_scenario and again after a seed override.
  void resolve();
};

/// Parses and validates; relative graph paths resolve against `base_dir`.
Scenario parse_scenario(const nlohmann::json &doc,
                        const std::filesystem::path &base_dir);

/// Reads, parses and validates a scenario file. Throws ScenarioError.
Scenario load_scenario(const std::filesystem::path &path);

/// Fully defaulted document equivalent to `s`.
nlohmann::ordered_json to_json(const Scenario &s);

/// A scenario with every default and a small population.
Scenario default_scenario();

Graph build_scenario_graph(const Scenario &s);

struct RunOptions {
  std::filesystem::path output_dir = ".";
  std::optional<int> workers;
  bool quiet = false;
};

struct Artifact {
  std::filesystem::path path;
  std::string summary;
};

/// Runs the scenario and writes every requested artifact; returns them in
/// write order. Numerical failures surface as PolicyError (simulation) or
/// ComplexRootsError / DomainError (sensitivity sweep).
std::vector<Artifact> run_scenario(const Scenario &s, const RunOptions &opts,
                                   std::ostream *log);

/// Rows `param,value,u_star,sens_closed,sens_fd,sign_ok` with header.
std::string sensitivity_sweep(const SensitivityRequest &req,
                              const KernelParams &kernel);

/// Artifact writers; each returns the file text.
std::string trajectory_csv(const Trajectory &tr);
std::string kde_csv(double time, std::span<const double> grid,
                    std::span<const double> density);
nlohmann::ordered_json to_json(const ControlSolution &sol);
nlohmann::ordered_json to_json(const CostReport &rep);
nlohmann::ordered_json to_json(const PicardResult &res, const PicardRequest &req);

} // namespace mvfj
