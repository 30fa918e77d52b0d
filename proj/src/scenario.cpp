#include "mvfj/scenario.hpp"

#include "mvfj/csv.hpp"
#include "mvfj/measure.hpp"
#include "mvfj/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace mvfj {

using nlohmann::json;
using nlohmann::ordered_json;

ScenarioError::ScenarioError(std::string where, const std::string &message)
    : ParameterError(where + ": " + message), where_(std::move(where)) {}

namespace {

// Typed, pointer-tracking view of one JSON object; unknown keys are errors.
class Reader {
public:
  Reader(const json &node, std::string pointer)
      : node_(node), pointer_(std::move(pointer)) {
    if (!node_.is_object())
      throw ScenarioError(where(), "expected an object");
  }

  std::string where() const { return pointer_.empty() ? "/" : pointer_; }
  std::string where(const std::string &key) const {
    return pointer_ + "/" + key;
  }

  bool has(const std::string &key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json &at(const std::string &key) {
    seen_.insert(key);
    if (!node_.contains(key))
      throw ScenarioError(where(key), "required field missing");
    return node_.at(key);
  }

  double number(const std::string &key, double def) {
    return has(key) ? number(key) : def;
  }
  double number(const std::string &key) {
    const auto &v = at(key);
    if (!v.is_number())
      throw ScenarioError(where(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string &key, std::uint64_t def) {
    if (!has(key))
      return def;
    const auto &v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ScenarioError(where(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string &key, bool def) {
    if (!has(key))
      return def;
    const auto &v = at(key);
    if (!v.is_boolean())
      throw ScenarioError(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string &key, const std::string &def) {
    if (!has(key))
      return def;
    const auto &v = at(key);
    if (!v.is_string())
      throw ScenarioError(where(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string &key) {
    const auto &v = at(key);
    return number_array(v, where(key));
  }

  static std::vector<double> number_array(const json &v,
                                          const std::string &where) {
    if (!v.is_array())
      throw ScenarioError(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number())
        throw ScenarioError(where + "/" + std::to_string(k), "expected a number");
      out.push_back(v[k].get<double>());
    }
    return out;
  }

  static std::vector<std::pair<double, double>>
  pair_array(const json &v, const std::string &where) {
    if (!v.is_array() || v.empty())
      throw ScenarioError(where, "expected a non-empty array of [time, value]");
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto p = number_array(v[k], where + "/" + std::to_string(k));
      if (p.size() != 2)
        throw ScenarioError(where + "/" + std::to_string(k),
                            "expected [time, value]");
      out.emplace_back(p[0], p[1]);
    }
    return out;
  }

  void finish() const {
    for (const auto &[key, value] : node_.items())
      if (!seen_.count(key))
        throw ScenarioError(pointer_ + "/" + key, "unknown field");
  }

private:
  const json &node_;
  std::string pointer_;
  std::set<std::string> seen_;
};

template <class F> auto guarded(const std::string &where, F &&f) {
  try {
    return f();
  } catch (const ScenarioError &) {
    throw;
  } catch (const std::exception &e) {
    throw ScenarioError(where, e.what());
  }
}

GraphSource parse_graph(Reader &top, const std::filesystem::path &base) {
  GraphSource g;
  if (!top.has("graph"))
    return g;
  Reader r(top.at("graph"), "/graph");
  const auto kind = r.string("kind", "erdos-renyi");
  if (kind == "erdos-renyi") {
    g.spec.kind = GraphKind::erdos_renyi;
    g.spec.edge_probability = r.number("p", 0.0);
    g.spec.default_weight = r.number("weight", 1.0);
    g.spec.default_k = r.number("stubbornness", 0.0);
  } else if (kind == "clustered") {
    g.spec.kind = GraphKind::clustered;
    g.spec.clusters = r.unsigned_int("clusters", 1);
    g.spec.p_in = r.number("p_in", 0.0);
    g.spec.p_out = r.number("p_out", 0.0);
    g.spec.stubborn_fraction = r.number("stubborn_fraction", 0.0);
    g.spec.stubborn_k = r.number("stubborn_k", 0.0);
    g.spec.default_k = r.number("default_k", 0.0);
    g.spec.default_weight = r.number("weight", 1.0);
  } else if (kind == "explicit") {
    g.spec.kind = GraphKind::explicit_lists;
    g.edges = base / r.string("edges", "");
    g.nodes = base / r.string("nodes", "");
    if (!r.has("edges") || !r.has("nodes"))
      throw ScenarioError("/graph", "explicit graphs need 'edges' and 'nodes'");
  } else {
    throw ScenarioError("/graph/kind",
                        "expected erdos-renyi, clustered or explicit");
  }
  r.finish();
  return g;
}

void parse_simulation(Reader &top, Scenario &s) {
  if (!top.has("simulation"))
    return;
  Reader r(top.at("simulation"), "/simulation");
  s.sim.n = r.unsigned_int("n", s.sim.n);
  s.sim.horizon = r.number("horizon", s.sim.horizon);
  s.sim.step = r.number("step", s.sim.step);
  s.sim.clamp = r.boolean("clamp", s.sim.clamp);
  s.sim.workers = static_cast<int>(r.unsigned_int("workers", 1));

  s.sim.sigma.assign(s.sim.n, 0.0);
  if (r.has("sigma")) {
    const auto &v = r.at("sigma");
    if (v.is_number())
      s.sim.sigma.assign(s.sim.n, v.get<double>());
    else
      s.sim.sigma = Reader::number_array(v, "/simulation/sigma");
  }

  if (r.has("alpha")) {
    const auto &v = r.at("alpha");
    if (v.is_number()) {
      s.sim.alpha = DecaySchedule::constant(v.get<double>());
    } else {
      Reader a(v, "/simulation/alpha");
      const auto pts = Reader::pair_array(a.at("table"), "/simulation/alpha/table");
      a.finish();
      s.sim.alpha = guarded("/simulation/alpha",
                            [&] { return DecaySchedule::table(pts); });
    }
  }

  if (r.has("kernel")) {
    Reader k(r.at("kernel"), "/simulation/kernel");
    s.sim.kernel.scale = k.number("scale", 0.0);
    s.sim.kernel.range = k.number("range", 0.0);
    k.finish();
  }

  if (r.has("x0")) {
    const auto &v = r.at("x0");
    if (v.is_array()) {
      s.x0.uniform = false;
      s.x0.values = Reader::number_array(v, "/simulation/x0");
    } else {
      Reader u(v, "/simulation/x0");
      const auto range = Reader::number_array(u.at("uniform"), "/simulation/x0/uniform");
      u.finish();
      if (range.size() != 2)
        throw ScenarioError("/simulation/x0/uniform", "expected [low, high]");
      s.x0.uniform = true;
      s.x0.low = range[0];
      s.x0.high = range[1];
      if (!(0.0 <= s.x0.low && s.x0.low <= s.x0.high && s.x0.high <= 1.0))
        throw ScenarioError("/simulation/x0/uniform",
                            "need 0 <= low <= high <= 1");
    }
  }
  r.finish();
}

void parse_multiplier(Reader &top, Scenario &s) {
  if (!top.has("multiplier"))
    return;
  Reader r(top.at("multiplier"), "/multiplier");
  const auto kind = r.string("kind", "linear");
  if (kind == "linear") {
    const double l0 = r.number("lambda0", 0.0);
    const double rate = r.number("rate", 1.0);
    s.multiplier = guarded("/multiplier",
                           [&] { return MultiplierModel::linear(l0, rate); });
  } else if (kind == "tabulated") {
    const auto pts = Reader::pair_array(r.at("table"), "/multiplier/table");
    s.multiplier = guarded("/multiplier",
                           [&] { return MultiplierModel::tabulated(pts); });
  } else {
    throw ScenarioError("/multiplier/kind", "expected linear or tabulated");
  }
  r.finish();
}

void parse_policy(Reader &top, Scenario &s) {
  if (!top.has("policy"))
    return;
  Reader r(top.at("policy"), "/policy");
  const auto kind = r.string("kind", "zero");
  if (kind == "zero") {
    s.policy = PolicyKind::zero;
  } else if (kind == "constant") {
    s.policy = PolicyKind::constant;
    s.constant_control = r.number("value");
  } else if (kind == "optimal") {
    s.policy = PolicyKind::optimal;
  } else {
    throw ScenarioError("/policy/kind", "expected zero, constant or optimal");
  }
  r.finish();
}

SensitivityRequest parse_sensitivity(const json &node) {
  Reader r(node, "/outputs/sensitivity");
  SensitivityRequest q;
  const auto regime = r.string("regime", "case1");
  if (regime == "case1")
    q.regime = SensitivityRegime::case1;
  else if (regime == "case2")
    q.regime = SensitivityRegime::case2;
  else
    throw ScenarioError("/outputs/sensitivity/regime", "expected case1 or case2");
  q.param = r.string("param", q.param);
  q.values = r.numbers("values");
  if (q.values.empty())
    throw ScenarioError("/outputs/sensitivity/values", "grid is empty");
  if (r.has("context")) {
    Reader c(r.at("context"), "/outputs/sensitivity/context");
    q.agents = c.unsigned_int("agents", q.agents);
    q.x_i = c.number("x_i", q.x_i);
    q.x_j = c.number("x_j", q.x_j);
    q.x0 = c.number("x0", q.x0);
    q.w = c.number("w", q.w);
    q.k = c.number("k", q.k);
    q.sigma = c.number("sigma", q.sigma);
    q.brownian = c.number("brownian", q.brownian);
    q.s = c.number("s", q.s);
    q.alpha = c.number("alpha", q.alpha);
    q.step = c.number("step", q.step);
    q.dlambda_ds = c.number("dlambda_ds", q.dlambda_ds);
    c.finish();
  }
  r.finish();
  static const std::set<std::string> params{"x_i", "x_j",   "x0",    "w",
                                            "k",   "sigma", "brownian", "s",
                                            "alpha", "step", "dlambda_ds"};
  if (!params.count(q.param))
    throw ScenarioError("/outputs/sensitivity/param",
                        "unknown sweep parameter '" + q.param + "'");
  if (q.agents < 2)
    throw ScenarioError("/outputs/sensitivity/context/agents",
                        "need at least two agents");
  return q;
}

void parse_outputs(Reader &top, Scenario &s) {
  if (!top.has("outputs"))
    return;
  Reader r(top.at("outputs"), "/outputs");
  s.write_trajectories = r.boolean("trajectories", s.write_trajectories);
  s.write_controls = r.boolean("controls", s.write_controls);
  s.write_costs = r.boolean("costs", s.write_costs);
  s.cost_paths = r.unsigned_int("cost_paths", s.cost_paths);
  if (s.cost_paths == 0)
    throw ScenarioError("/outputs/cost_paths", "must be >= 1");
  if (r.has("kde")) {
    Reader k(r.at("kde"), "/outputs/kde");
    KdeRequest q;
    q.times = k.numbers("times");
    if (k.has("grid")) {
      Reader g(k.at("grid"), "/outputs/kde/grid");
      q.grid_min = g.number("min", q.grid_min);
      q.grid_max = g.number("max", q.grid_max);
      q.points = g.unsigned_int("points", q.points);
      g.finish();
    }
    if (k.has("bandwidth"))
      q.bandwidth = k.number("bandwidth");
    k.finish();
    if (!(q.grid_min < q.grid_max) || q.points < 2)
      throw ScenarioError("/outputs/kde/grid", "need min < max and >= 2 points");
    if (q.bandwidth && !(*q.bandwidth > 0.0))
      throw ScenarioError("/outputs/kde/bandwidth", "must be > 0");
    s.kde = q;
  }
  if (r.has("picard")) {
    Reader p(r.at("picard"), "/outputs/picard");
    PicardRequest q;
    q.tol = p.number("tol", q.tol);
    q.max_iter = p.unsigned_int("max_iter", q.max_iter);
    p.finish();
    if (!(q.tol > 0.0) || q.max_iter == 0)
      throw ScenarioError("/outputs/picard", "need tol > 0 and max_iter >= 1");
    s.picard = q;
  }
  if (r.has("sensitivity"))
    s.sensitivity = parse_sensitivity(r.at("sensitivity"));
  r.finish();
}

void validate(const Scenario &s) {
  guarded("/simulation", [&] {
    s.sim.validate();
    return 0;
  });
  if (s.graph.spec.kind != GraphKind::explicit_lists)
    guarded("/graph", [&] {
      s.graph.spec.validate();
      return 0;
    });
  if (s.policy == PolicyKind::optimal && !s.multiplier)
    throw ScenarioError("/multiplier",
                        "policy 'optimal' requires a multiplier model");
  if (s.kde) {
    for (std::size_t k = 0; k < s.kde->times.size(); ++k) {
      const double t = s.kde->times[k];
      if (!(t >= 0.0 && t <= s.sim.horizon))
        throw ScenarioError("/outputs/kde/times/" + std::to_string(k),
                            "snapshot time " + csv::format_double(t) +
                                " outside [0, " +
                                csv::format_double(s.sim.horizon) + "]");
    }
  }
}

} // namespace

void Scenario::resolve() {
  sim.seed = seed;
  graph.spec.seed = seed;
  graph.spec.n = sim.n;
  if (x0.uniform) {
    const CounterRng rng(seed);
    sim.x0.resize(sim.n);
    for (std::size_t i = 0; i < sim.n; ++i)
      sim.x0[i] = x0.low + (x0.high - x0.low) *
                               rng.uniform(RngStream::initial_opinions, i, 0);
  } else {
    sim.x0 = x0.values;
  }
}

Scenario parse_scenario(const json &doc, const std::filesystem::path &base) {
  Scenario s;
  Reader top(doc, "");
  s.name = top.string("name", s.name);
  s.seed = top.unsigned_int("seed", s.seed);
  s.graph = parse_graph(top, base);
  parse_simulation(top, s);
  parse_multiplier(top, s);
  parse_policy(top, s);
  parse_outputs(top, s);
  top.finish();
  s.resolve();
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ScenarioError(path.string(), "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    // Convert the byte offset into line:column.
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t b = 0; b + 1 < upto; ++b) {
      if (text[b] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ScenarioError(path.string() + ":" + std::to_string(line) + ":" +
                            std::to_string(col),
                        "JSON syntax error");
  }
  try {
    return parse_scenario(doc, path.parent_path());
  } catch (const ScenarioError &e) {
    throw ScenarioError(path.string() + ":" + e.where(),
                        std::string(e.what()).substr(e.where().size() + 2));
  }
}

Scenario default_scenario() {
  Scenario s;
  s.name = "default";
  s.seed = 1;
  s.graph.spec.kind = GraphKind::erdos_renyi;
  s.graph.spec.edge_probability = 0.2;
  s.graph.spec.default_weight = 1.0;
  s.graph.spec.default_k = 0.5;
  s.sim.n = 20;
  s.sim.horizon = 1.0;
  s.sim.step = 0.01;
  s.sim.sigma.assign(s.sim.n, 0.05);
  s.sim.alpha = DecaySchedule::constant(1.0);
  s.sim.kernel = {1.0, 0.0};
  s.multiplier = MultiplierModel::linear(0.0, 1.0);
  s.policy = PolicyKind::zero;
  s.resolve();
  return s;
}

ordered_json to_json(const Scenario &s) {
  ordered_json doc;
  doc["name"] = s.name;
  doc["seed"] = s.seed;

  ordered_json g;
  switch (s.graph.spec.kind) {
  case GraphKind::erdos_renyi:
    g["kind"] = "erdos-renyi";
    g["p"] = s.graph.spec.edge_probability;
    g["weight"] = s.graph.spec.default_weight;
    g["stubbornness"] = s.graph.spec.default_k;
    break;
  case GraphKind::clustered:
    g["kind"] = "clustered";
    g["clusters"] = s.graph.spec.clusters;
    g["p_in"] = s.graph.spec.p_in;
    g["p_out"] = s.graph.spec.p_out;
    g["stubborn_fraction"] = s.graph.spec.stubborn_fraction;
    g["stubborn_k"] = s.graph.spec.stubborn_k;
    g["default_k"] = s.graph.spec.default_k;
    g["weight"] = s.graph.spec.default_weight;
    break;
  case GraphKind::explicit_lists:
    g["kind"] = "explicit";
    g["edges"] = s.graph.edges.string();
    g["nodes"] = s.graph.nodes.string();
    break;
  }
  doc["graph"] = g;

  ordered_json sim;
  sim["n"] = s.sim.n;
  sim["horizon"] = s.sim.horizon;
  sim["step"] = s.sim.step;
  sim["sigma"] = s.sim.sigma;
  if (s.sim.alpha.is_constant()) {
    sim["alpha"] = s.sim.alpha.points().front().second;
  } else {
    ordered_json table = ordered_json::array();
    for (const auto &[t, a] : s.sim.alpha.points())
      table.push_back({t, a});
    sim["alpha"] = {{"table", table}};
  }
  sim["kernel"] = {{"scale", s.sim.kernel.scale}, {"range", s.sim.kernel.range}};
  if (s.x0.uniform)
    sim["x0"] = {{"uniform", {s.x0.low, s.x0.high}}};
  else
    sim["x0"] = s.x0.values;
  sim["clamp"] = s.sim.clamp;
  sim["workers"] = s.sim.workers;
  doc["simulation"] = sim;

  if (s.multiplier) {
    if (s.multiplier->is_linear()) {
      doc["multiplier"] = {{"kind", "linear"},
                           {"lambda0", s.multiplier->lambda0()},
                           {"rate", s.multiplier->rate(0.0)}};
    } else {
      ordered_json table = ordered_json::array();
      for (const auto &[t, l] : s.multiplier->table())
        table.push_back({t, l});
      doc["multiplier"] = {{"kind", "tabulated"}, {"table", table}};
    }
  } else {
    doc["multiplier"] = nullptr;
  }

  switch (s.policy) {
  case PolicyKind::zero:
    doc["policy"] = {{"kind", "zero"}};
    break;
  case PolicyKind::constant:
    doc["policy"] = {{"kind", "constant"}, {"value", s.constant_control}};
    break;
  case PolicyKind::optimal:
    doc["policy"] = {{"kind", "optimal"}};
    break;
  }

  ordered_json out;
  out["trajectories"] = s.write_trajectories;
  out["controls"] = s.write_controls;
  out["costs"] = s.write_costs;
  out["cost_paths"] = s.cost_paths;
  if (s.kde) {
    ordered_json k;
    k["times"] = s.kde->times;
    k["grid"] = {{"min", s.kde->grid_min},
                 {"max", s.kde->grid_max},
                 {"points", s.kde->points}};
    if (s.kde->bandwidth)
      k["bandwidth"] = *s.kde->bandwidth;
    else
      k["bandwidth"] = nullptr;
    out["kde"] = k;
  } else {
    out["kde"] = nullptr;
  }
  if (s.picard)
    out["picard"] = {{"tol", s.picard->tol}, {"max_iter", s.picard->max_iter}};
  else
    out["picard"] = nullptr;
  if (s.sensitivity) {
    const auto &q = *s.sensitivity;
    ordered_json ctx;
    ctx["agents"] = q.agents;
    ctx["x_i"] = q.x_i;
    ctx["x_j"] = q.x_j;
    ctx["x0"] = q.x0;
    ctx["w"] = q.w;
    ctx["k"] = q.k;
    ctx["sigma"] = q.sigma;
    ctx["brownian"] = q.brownian;
    ctx["s"] = q.s;
    ctx["alpha"] = q.alpha;
    ctx["step"] = q.step;
    ctx["dlambda_ds"] = q.dlambda_ds;
    out["sensitivity"] = {
        {"regime", q.regime == SensitivityRegime::case1 ? "case1" : "case2"},
        {"param", q.param},
        {"values", q.values},
        {"context", ctx}};
  } else {
    out["sensitivity"] = nullptr;
  }
  doc["outputs"] = out;
  return doc;
}

Graph build_scenario_graph(const Scenario &s) {
  if (s.graph.spec.kind == GraphKind::explicit_lists) {
    auto g = load_graph_csv(s.graph.edges, s.graph.nodes);
    if (g.size() != s.sim.n)
      throw ScenarioError("/graph", "explicit graph has " +
                                        std::to_string(g.size()) +
                                        " agents, simulation has " +
                                        std::to_string(s.sim.n));
    return g;
  }
  return build_graph(s.graph.spec);
}

std::string trajectory_csv(const Trajectory &tr) {
  std::string out = "step,time,agent,opinion,control,brownian,step_cost\n";
  for (std::size_t k = 0; k < tr.points(); ++k) {
    const auto t = csv::format_double(tr.times[k]);
    for (std::size_t i = 0; i < tr.agents(); ++i) {
      out += std::to_string(k);
      out += ',';
      out += t;
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += csv::format_double(tr.opinions(i, k));
      out += ',';
      out += csv::format_double(tr.controls(i, k));
      out += ',';
      out += csv::format_double(tr.brownian(i, k));
      out += ',';
      out += csv::format_double(tr.step_costs(i, k));
      out += '\n';
    }
  }
  return out;
}

std::string kde_csv(double time, std::span<const double> grid,
                    std::span<const double> density) {
  std::string out = "time,grid_x,density\n";
  const auto t = csv::format_double(time);
  for (std::size_t g = 0; g < grid.size(); ++g)
    out += t + "," + csv::format_double(grid[g]) + "," +
           csv::format_double(density[g]) + "\n";
  return out;
}

ordered_json to_json(const ControlSolution &sol) {
  ordered_json j;
  j["T1"] = sol.t1;
  j["T2"] = sol.t2;
  j["T3"] = sol.t3;
  j["discriminant"] = sol.discriminant;
  j["roots"] = sol.roots;
  j["chosen"] = sol.chosen;
  j["branch"] = std::string(to_string(sol.branch));
  j["degenerate"] = sol.degenerate;
  return j;
}

ordered_json to_json(const CostReport &rep) {
  ordered_json j;
  j["agent"] = rep.agent;
  j["total"] = rep.total;
  j["disagreement"] = rep.disagreement;
  j["stubbornness"] = rep.stubbornness;
  j["effort"] = rep.effort;
  j["paths"] = rep.paths;
  j["standard_error"] = rep.standard_error;
  return j;
}

ordered_json to_json(const PicardResult &res, const PicardRequest &req) {
  ordered_json j;
  j["tol"] = req.tol;
  j["max_iter"] = req.max_iter;
  j["iterations"] = res.terminal_w2.size();
  j["converged"] = res.converged;
  j["terminal_w2"] = res.terminal_w2;
  j["sup_w2"] = res.sup_w2;
  return j;
}

namespace {

struct SweepPoint {
  std::vector<double> x;
  std::vector<Neighbor> neighbors;
  ControlContext ctx;
};

double &sweep_field(SensitivityRequest &q, const std::string &param) {
  if (param == "x_i") return q.x_i;
  if (param == "x_j") return q.x_j;
  if (param == "x0") return q.x0;
  if (param == "w") return q.w;
  if (param == "k") return q.k;
  if (param == "sigma") return q.sigma;
  if (param == "brownian") return q.brownian;
  if (param == "s") return q.s;
  if (param == "alpha") return q.alpha;
  if (param == "step") return q.step;
  if (param == "dlambda_ds") return q.dlambda_ds;
  throw ParameterError("unknown sweep parameter '" + param + "'");
}

// Owns the storage the context views; shift moves the opinions the
// derivative is taken with respect to.
std::unique_ptr<SweepPoint> make_point(const SensitivityRequest &q,
                                       const KernelParams &kernel,
                                       double shift) {
  auto p = std::make_unique<SweepPoint>();
  const bool case1 = q.regime == SensitivityRegime::case1;
  p->x.assign(q.agents, case1 ? q.x_i : q.x_j);
  p->x[0] = q.x_i;
  if (case1) {
    for (auto &v : p->x)
      v += shift;
  } else {
    p->x[1] += shift;
  }
  for (std::size_t j = 1; j < q.agents; ++j)
    p->neighbors.push_back({j, q.w});
  if (q.w == 0.0)
    p->neighbors.clear();
  auto &c = p->ctx;
  c.s = q.s;
  c.eps = q.step;
  c.agent = 0;
  c.x = p->x;
  c.x0 = q.x0;
  c.brownian = q.brownian;
  c.sigma = q.sigma;
  c.alpha = q.alpha;
  c.neighbors = p->neighbors;
  c.stubbornness = q.k;
  c.kernel = kernel;
  c.dlambda_ds = q.dlambda_ds;
  c.dlambda = q.dlambda_ds * q.step;
  return p;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace

std::string sensitivity_sweep(const SensitivityRequest &req,
                              const KernelParams &kernel) {
  constexpr double h = 1e-6;
  std::string out = "param,value,u_star,sens_closed,sens_fd,sign_ok\n";
  for (double value : req.values) {
    SensitivityRequest q = req;
    sweep_field(q, q.param) = value;
    const auto base = make_point(q, kernel, 0.0);
    const double u_star = optimal_control(base->ctx).chosen;
    double closed = 0.0;
    if (q.regime == SensitivityRegime::case1) {
      closed = sensitivity_case1_dxi(base->ctx);
    } else {
      if (q.w == 0.0)
        throw PreconditionError("Case-II sweep needs w > 0 so that agent 1 is "
                                "a neighbor");
      closed = sensitivity_case2_dxj(base->ctx, 1);
    }
    const auto up = make_point(q, kernel, h);
    const auto down = make_point(q, kernel, -h);
    const double fd = (optimal_control(up->ctx).chosen -
                       optimal_control(down->ctx).chosen) /
                      (2.0 * h);
    out += q.param + "," + csv::format_double(value) + "," +
           csv::format_double(u_star) + "," + csv::format_double(closed) + "," +
           csv::format_double(fd) + "," +
           (sign_of(closed) == sign_of(fd) ? "true" : "false") + "\n";
  }
  return out;
}

std::vector<Artifact> run_scenario(const Scenario &scenario,
                                   const RunOptions &opts, std::ostream *log) {
  Scenario s = scenario;
  if (opts.workers)
    s.sim.workers = *opts.workers;
  validate(s);

  const auto graph = std::make_shared<const Graph>(build_scenario_graph(s));
  std::shared_ptr<OptimalPolicy> optimal;
  Policy policy;
  switch (s.policy) {
  case PolicyKind::zero:
    policy = zero_policy();
    break;
  case PolicyKind::constant:
    policy = constant_policy(s.constant_control);
    break;
  case PolicyKind::optimal:
    optimal = std::make_shared<OptimalPolicy>(graph, *s.multiplier,
                                              s.write_controls);
    policy = [optimal](const PolicyInput &in, std::span<double> u) {
      (*optimal)(in, u);
    };
    break;
  }

  // All numerical work happens before any file is written.
  std::vector<Trajectory> paths;
  paths.reserve(s.cost_paths);
  for (std::size_t p = 0; p < s.cost_paths; ++p) {
    SimConfig cfg = s.sim;
    cfg.seed = s.sim.seed + p;
    if (p == 1 && optimal && s.write_controls) {
      // Only the first path's control log is exported.
      optimal = std::make_shared<OptimalPolicy>(graph, *s.multiplier, false);
      policy = [optimal](const PolicyInput &in, std::span<double> u) {
        (*optimal)(in, u);
      };
    }
    paths.push_back(simulate(cfg, *graph, policy));
  }
  const Trajectory &tr = paths.front();

  std::optional<PicardResult> picard;
  if (s.picard) {
    const Policy picard_policy =
        s.policy == PolicyKind::optimal
            ? Policy([p = std::make_shared<OptimalPolicy>(graph, *s.multiplier,
                                                          false)](
                         const PolicyInput &in, std::span<double> u) {
                (*p)(in, u);
              })
            : policy;
    picard = picard_law_iteration(s.sim, *graph, picard_policy, s.picard->tol,
                                  s.picard->max_iter);
  }

  std::optional<std::string> sweep;
  if (s.sensitivity)
    sweep = sensitivity_sweep(*s.sensitivity, s.sim.kernel);

  std::filesystem::create_directories(opts.output_dir);
  std::vector<Artifact> written;
  auto emit = [&](const std::string &name, const std::string &text,
                  const std::string &what) {
    const auto path = opts.output_dir / name;
    csv::write_text(path, text);
    written.push_back({path, what});
    if (log && !opts.quiet)
      *log << "wrote " << path.string() << ": " << what << "\n";
  };

  if (s.write_trajectories)
    emit("trajectories.csv", trajectory_csv(tr),
         std::to_string(tr.points() * tr.agents()) + " rows, " +
             std::to_string(tr.out_of_range) + " out-of-range updates");

  if (s.write_controls && optimal) {
    // The first-path policy object may have been replaced; rebuild the log
    // from a dedicated deterministic rerun when several paths were simulated.
    std::shared_ptr<OptimalPolicy> logger = optimal;
    if (s.cost_paths > 1) {
      logger = std::make_shared<OptimalPolicy>(graph, *s.multiplier, true);
      simulate(s.sim, *graph, [logger](const PolicyInput &in, std::span<double> u) {
        (*logger)(in, u);
      });
    }
    ordered_json arr = ordered_json::array();
    for (const auto &e : logger->log()) {
      ordered_json j;
      j["step"] = e.step;
      j["agent"] = e.agent;
      const auto sol = to_json(e.solution);
      for (const auto &[key, value] : sol.items())
        j[key] = value;
      arr.push_back(std::move(j));
    }
    emit("controls.json", arr.dump(2) + "\n",
         std::to_string(arr.size()) + " control solutions");
  }

  if (s.write_costs) {
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < graph->size(); ++i)
      arr.push_back(to_json(total_cost(paths, *graph, i)));
    emit("costs.json", arr.dump(2) + "\n",
         std::to_string(arr.size()) + " agent cost reports over " +
             std::to_string(paths.size()) + " path(s)");
  }

  if (s.kde) {
    const auto grid = linspace(s.kde->grid_min, s.kde->grid_max, s.kde->points);
    for (double t : s.kde->times) {
      const auto k = std::min<std::size_t>(
          static_cast<std::size_t>(std::llround(t / s.sim.step)),
          tr.points() - 1);
      const auto slice = tr.opinions.at(k);
      const double h =
          s.kde->bandwidth ? *s.kde->bandwidth : silverman_bandwidth(slice);
      const auto dens = kde(slice, h, grid);
      emit("kde_" + csv::format_double(t) + ".csv",
           kde_csv(tr.times[k], grid, dens),
           std::to_string(grid.size()) + " grid points, bandwidth " +
               csv::format_double(h));
    }
  }

  if (picard)
    emit("picard.json", to_json(*picard, *s.picard).dump(2) + "\n",
         std::to_string(picard->terminal_w2.size()) + " iterations, " +
             (picard->converged ? "converged" : "not converged"));

  if (sweep) {
    const auto rows = static_cast<std::size_t>(
        std::count(sweep->begin(), sweep->end(), '\n') - 1);
    emit("sensitivity.csv", *sweep, std::to_string(rows) + " rows");
  }
  return written;
}

} // namespace mvfj
