#include "dgopt/io.hpp"

#include "dgopt/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace dgopt {

namespace {

const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw InputError(std::string(where) + ": missing required field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw InputError(std::string(what) + " must be a number");
  return j.get<double>();
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

WeightedDigraph graph_from_json(const json& j) {
  if (!j.is_object()) throw InputError("graph must be a JSON object");
  const json& nj = require(j, "n", "graph");
  if (!nj.is_number_integer() || nj.get<long long>() < 1)
    throw InputError("graph: 'n' must be a positive integer");
  const int n = nj.get<int>();

  if (j.contains("adjacency")) {
    const json& rows = j.at("adjacency");
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
      throw InputError("graph: 'adjacency' must have n rows");
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
      if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n)
        throw InputError("graph: adjacency row " + std::to_string(i) + " must have n entries");
      for (int k = 0; k < n; ++k) a(i, k) = number(rows[i][k], "adjacency entry");
    }
    return WeightedDigraph(std::move(a));
  }
  if (j.contains("edges")) {
    const json& edges = j.at("edges");
    if (!edges.is_array()) throw InputError("graph: 'edges' must be an array");
    std::vector<std::tuple<int, int, double>> list;
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw InputError("graph: each edge must be [i, j, w] with integer i, j");
      list.emplace_back(e[0].get<int>(), e[1].get<int>(), number(e[2], "edge weight"));
    }
    return WeightedDigraph::from_edges(n, list);
  }
  throw InputError("graph: expected 'adjacency' or 'edges'");
}

json graph_to_json(const WeightedDigraph& g) {
  json rows = json::array();
  for (int i = 0; i < g.size(); ++i) {
    json row = json::array();
    for (int k = 0; k < g.size(); ++k) row.push_back(g.weight(i, k));
    rows.push_back(std::move(row));
  }
  return {{"n", g.size()}, {"adjacency", std::move(rows)}};
}

Box box_from_json(const json& j, int d) {
  Box box;
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    box = Box::cube(d, j[0].get<double>(), j[1].get<double>());
  } else if (j.is_object()) {
    box.lower = vector_from_json(require(j, "lower", "box"), "box lower");
    box.upper = vector_from_json(require(j, "upper", "box"), "box upper");
  } else {
    throw InputError("box must be [lo, hi] or {\"lower\": [...], \"upper\": [...]}");
  }
  if (!box.valid() || box.dimension() != d)
    throw InputError("box must have lower <= upper in dimension " + std::to_string(d));
  return box;
}

ObjectiveFunction objective_from_json(const json& j, const std::optional<Box>& default_box) {
  if (!j.is_object()) throw InputError("objective entry must be a JSON object");
  std::optional<double> k_hint;
  if (j.contains("K")) k_hint = number(j.at("K"), "objective K");

  if (j.contains("expr")) {
    if (!j.at("expr").is_string()) throw InputError("objective 'expr' must be a string");
    const Expression e = parse_expression(j.at("expr").get<std::string>());
    const int d = std::max(1, e.max_variable_index() + 1);
    std::optional<Box> box;
    if (j.contains("box"))
      box = box_from_json(j.at("box"), d);
    else if (default_box && default_box->dimension() == d)
      box = default_box;
    return make_objective(e, k_hint, box);
  }

  const std::string name = require(j, "builtin", "objective").get<std::string>();
  std::optional<Box> box = default_box;
  if (j.contains("box")) box = box_from_json(j.at("box"), 1);
  if (box && box->dimension() != 1) box.reset();
  auto param = [&](const char* key, double fallback) {
    return j.contains(key) ? number(j.at(key), key) : fallback;
  };

  ObjectiveFunction f = [&] {
    if (name == "quadratic") return builtin::quadratic(param("k", 1.0), param("center", 0.0));
    if (name == "abs") return builtin::absolute(param("center", 0.0));
    if (name == "power") {
      const double m = param("m", 1.0);
      if (m != std::floor(m)) throw InputError("power builtin: m must be an integer");
      return builtin::power(static_cast<int>(m), box);
    }
    if (name == "constant") return builtin::constant(param("c", 0.0));
    if (name == "exp") return builtin::exponential(param("a", 1.0), box);
    throw InputError("unknown builtin objective '" + name + "'");
  }();
  if (k_hint) {
    if (!(*k_hint > 0.0)) throw InputError("K hint must be positive");
    f = f.with_lipschitz(*k_hint, LipschitzSource::Hint);
  }
  return f;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  const json& gj = j.contains("graph") ? j.at("graph") : j;
  ExperimentConfig cfg(graph_from_json(gj));
  const int n = cfg.graph.size();

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("balance_tol")) cfg.balance_tol = number(j.at("balance_tol"), "balance_tol");
  if (j.contains("lipschitz_k")) cfg.lipschitz_override = number(j.at("lipschitz_k"), "lipschitz_k");
  if (j.contains("dimension")) cfg.dimension = j.at("dimension").get<int>();

  if (j.contains("objectives")) {
    const json& objs = j.at("objectives");
    if (!objs.is_array() || static_cast<int>(objs.size()) != n)
      throw InputError("'objectives' must list one entry per agent (" + std::to_string(n) + ")");
    // The box dimension depends on the objectives, so peek at the first one.
    std::optional<Box> box;
    std::vector<ObjectiveFunction> parts;
    for (const auto& entry : objs) {
      if (j.contains("box") && !box) {
        int d = 1;
        if (entry.contains("expr") && entry.at("expr").is_string())
          d = std::max(1, parse_expression(entry.at("expr").get<std::string>()).max_variable_index() + 1);
        box = box_from_json(j.at("box"), d);
      }
      parts.push_back(objective_from_json(entry, box));
    }
    cfg.objectives = NetworkObjective(std::move(parts));
    cfg.dimension = cfg.objectives->dimension();
    cfg.box = box;
  } else if (j.contains("box")) {
    cfg.box = box_from_json(j.at("box"), cfg.dimension);
  }
  if (cfg.dimension < 1) throw InputError("dimension must be positive");

  if (j.contains("dynamics")) {
    const json& dj = j.at("dynamics");
    cfg.variant = variant_from_string(require(dj, "variant", "dynamics").get<std::string>());
    if (dj.contains("alpha")) {
      const json& a = dj.at("alpha");
      if (a.is_string()) {
        if (a.get<std::string>() != "auto") throw InputError("dynamics.alpha must be a number or \"auto\"");
      } else {
        cfg.alpha = number(a, "dynamics.alpha");
      }
    }
    if (dj.contains("beta")) cfg.beta = number(dj.at("beta"), "dynamics.beta");
    if (dj.contains("safety")) cfg.safety = number(dj.at("safety"), "dynamics.safety");
  }

  const int nd = n * cfg.dimension;
  if (j.contains("initial")) {
    const json& ij = j.at("initial");
    if (ij.contains("x0")) cfg.x0 = vector_from_json(ij.at("x0"), "initial.x0");
    if (ij.contains("z0")) cfg.z0 = vector_from_json(ij.at("z0"), "initial.z0");
    if ((cfg.x0 && cfg.x0->size() != nd) || (cfg.z0 && cfg.z0->size() != nd))
      throw InputError("initial.x0 and initial.z0 must have length n*d = " + std::to_string(nd));
  }

  if (j.contains("integrator")) {
    const json& ij = j.at("integrator");
    if (ij.contains("method")) {
      const std::string m = ij.at("method").get<std::string>();
      if (m == "auto")
        cfg.integrator.method = IntegratorMethod::Auto;
      else if (m == "euler")
        cfg.integrator.method = IntegratorMethod::Euler;
      else if (m == "rk4")
        cfg.integrator.method = IntegratorMethod::RK4;
      else
        throw InputError("integrator.method must be auto, euler or rk4");
    }
    if (ij.contains("dt")) cfg.integrator.dt = number(ij.at("dt"), "integrator.dt");
    if (ij.contains("t_final")) cfg.integrator.t_final = number(ij.at("t_final"), "integrator.t_final");
    if (ij.contains("record_every")) cfg.integrator.record_every = ij.at("record_every").get<int>();
  }

  if (j.contains("output")) {
    const json& oj = j.at("output");
    if (oj.contains("csv_path")) cfg.output.csv_path = oj.at("csv_path").get<std::string>();
    if (oj.contains("summary_path")) cfg.output.summary_path = oj.at("summary_path").get<std::string>();
    if (oj.contains("plot_path")) cfg.output.plot_path = oj.at("plot_path").get<std::string>();
  }
  return cfg;
}

json builtin_config(const std::string& name) {
  if (name != "figure-1") throw InputError("unknown built-in config '" + name + "'");
  json cfg;
  cfg["graph"] = graph_to_json(scenarios::example_graph());
  cfg["objectives"] = json::array({{{"expr", "exp(x)"}},
                                   {{"expr", "(x-3)^2"}},
                                   {{"expr", "(x+3)^2"}},
                                   {{"expr", "x^4"}},
                                   {{"expr", "4"}}});
  cfg["box"] = json::array({-3.0, 3.0});
  cfg["dynamics"] = {{"variant", "alpha_directed"}, {"alpha", 3.0}};
  cfg["initial"] = {{"x0", json::array({1.0, 2.0, 0.3, 1.0, 1.0})},
                    {"z0", json::array({1.0, 1.0, 1.0, 1.0, 1.0})}};
  // Long enough for the sustained-convergence test; the first 40 time
  // units are the window of the reference plot.
  cfg["integrator"] = {{"method", "rk4"}, {"dt", 1e-3}, {"t_final", 100.0}, {"record_every", 10}};
  return cfg;
}

LipschitzChoice choose_lipschitz(const ExperimentConfig& cfg) {
  LipschitzChoice choice;
  if (cfg.lipschitz_override) {
    choice = {*cfg.lipschitz_override, "override"};
  } else {
    if (!cfg.objectives) throw InputError("no objectives and no lipschitz_k given; K is unavailable");
    const auto k = cfg.objectives->lipschitz_k();
    if (!k)
      throw InputError("K is unavailable: give each objective a \"K\" hint, set a domain \"box\", "
                       "or pass lipschitz_k");
    choice = {*k, "objectives"};
  }
  if (!(choice.k > 0.0))
    throw InputError("K = 0: the objectives are constant. Any alpha >= 2*sqrt(2) makes the "
                     "agreement set asymptotically stable in that zero-objective case; "
                     "set dynamics.alpha explicitly instead of selecting it");
  return choice;
}

// ---------------------------------------------------------------------------

json complex_to_json(std::complex<double> c) { return json::array({c.real(), c.imag()}); }

json criterion_to_json(const CriterionVerdict& v) {
  return {{"passes", v.passes},
          {"margin", finite_or_null(v.worst_margin)},
          {"witness", v.witness ? complex_to_json(*v.witness) : json(nullptr)}};
}

json analyze_report(const LaplacianBundle& bundle, const CriterionVerdict& verdict) {
  json eig = json::array();
  for (const auto& l : bundle.eigvals) eig.push_back(complex_to_json(l));
  return {{"eigvals", std::move(eig)},
          {"criterion", criterion_to_json(verdict)},
          {"lambda_star_sym", bundle.lambda_star_sym}};
}

json check_graph_report(const WeightedDigraph& g, const LaplacianBundle& bundle,
                        const CriterionVerdict& verdict) {
  json r = analyze_report(bundle, verdict);
  r["n"] = g.size();
  r["connected"] = bundle.strongly_connected;
  r["balanced"] = bundle.balance.balanced;
  r["max_imbalance"] = bundle.balance.max_imbalance;
  r["sym_eigvals"] = vector_to_json(bundle.sym_eigvals);
  json comps = json::array();
  for (const auto& c : strongly_connected_components(g)) comps.push_back(c);
  r["components"] = std::move(comps);
  return r;
}

json select_params_report(const ParameterSelection& sel, const LipschitzChoice& k,
                          const ExperimentConfig& cfg) {
  json provenance = {{"source", k.source}};
  if (cfg.objectives) {
    json parts = json::array();
    for (const auto& p : cfg.objectives->parts())
      parts.push_back({{"objective", p.description()},
                       {"K", p.lipschitz_k() ? json(*p.lipschitz_k()) : json(nullptr)},
                       {"how", to_string(p.lipschitz_source())}});
    provenance["per_agent"] = std::move(parts);
  }
  if (cfg.box) provenance["box"] = {{"lower", vector_to_json(cfg.box->lower)},
                                    {"upper", vector_to_json(cfg.box->upper)}};
  return {{"beta_star", sel.beta_star},
          {"beta", sel.beta},
          {"alpha", sel.alpha},
          {"h_at_beta", sel.h_at_beta},
          {"h_at_beta_star", sel.h_at_beta_star},
          {"capped", sel.capped},
          {"lambda_star_sym", sel.lambda_star_sym},
          {"K", sel.lipschitz_k},
          {"K_provenance", std::move(provenance)}};
}

json simulation_summary(const DynamicsSpec& spec, const ExperimentResult& result,
                        const IntegratorConfig& integrator) {
  const auto& meta = result.trajectory.meta;
  const auto& last = result.trajectory.final();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(meta.spec_hash));
  const auto& c = result.certificate;
  json summary = {
      {"converged", result.converged},
      {"verdict", to_string(result.assessment.verdict)},
      {"t_detect", result.assessment.t_detect ? json(*result.assessment.t_detect) : json(nullptr)},
      {"agreement_value", vector_to_json(result.agreement_value)},
      {"final_V", finite_or_null(last.v)},
      {"final_Lx_norm", last.lx_norm},
      {"final_rhs_norm", last.rhs_norm},
      {"tail_min_agreement_distance", result.assessment.tail_min_agreement_distance},
      {"oracle_value", result.oracle_value ? vector_to_json(*result.oracle_value) : json(nullptr)},
      {"oracle_gap", result.oracle_gap ? json(*result.oracle_gap) : json(nullptr)},
      {"objective_gap", result.objective_gap ? json(*result.objective_gap) : json(nullptr)},
      {"certificate",
       {{"tol", c.tol},
        {"agreement_residual", c.agreement_residual},
        {"stationarity_residual", c.stationarity_residual},
        {"optimality_residual", c.optimality_residual},
        {"passes", c.passes()}}},
      {"z_sum_drift", meta.max_z_sum_drift},
      {"lyapunov_violations", meta.lyapunov_violations},
      {"variant", to_string(spec.variant())},
      {"alpha", spec.alpha()},
      {"beta", spec.beta() ? json(*spec.beta()) : json(nullptr)},
      {"integrator", to_string(meta.integrator)},
      {"dt", meta.dt},
      {"t_final", integrator.t_final},
      {"steps", meta.steps},
      {"spec_hash", hash}};
  return summary;
}

json counterexample_report(const CounterexampleReport& report) {
  json lin = json::array();
  for (const auto& l : report.linear_eigvals) lin.push_back(complex_to_json(l));
  json runs = json::array();
  for (const auto& r : report.runs)
    runs.push_back({{"label", r.label},
                    {"variant", to_string(r.variant)},
                    {"alpha", r.alpha},
                    {"verdict", to_string(r.assessment.verdict)},
                    {"converged", r.assessment.verdict == Verdict::Converged},
                    {"t_detect", r.assessment.t_detect ? json(*r.assessment.t_detect) : json(nullptr)},
                    {"tail_min_agreement_distance", finite_or_null(r.assessment.tail_min_agreement_distance)},
                    {"final_Lx_norm", r.assessment.final_lx_norm},
                    {"diverged", r.assessment.diverged}});
  return {{"criterion", criterion_to_json(report.criterion)},
          {"linear_eigvals", std::move(lin)},
          {"max_eigen_match_error", report.max_eigen_match_error},
          {"max_linear_real_part", report.max_linear_real_part},
          {"runs", std::move(runs)}};
}

std::vector<std::string> validate_report(const json& j, ReportKind kind) {
  std::vector<std::string> problems;
  if (!j.is_object()) return {"report is not an object"};
  auto need = [&](const json& obj, const std::string& key, auto pred, const char* type) {
    if (!obj.contains(key))
      problems.push_back("missing '" + key + "'");
    else if (!pred(obj.at(key)))
      problems.push_back("'" + key + "' is not " + type);
  };
  auto is_num = [](const json& v) { return v.is_number(); };
  auto is_num_or_null = [](const json& v) { return v.is_number() || v.is_null(); };
  auto is_bool = [](const json& v) { return v.is_boolean(); };
  auto is_arr = [](const json& v) { return v.is_array(); };
  auto is_obj = [](const json& v) { return v.is_object(); };
  auto is_str = [](const json& v) { return v.is_string(); };
  auto is_pair = [](const json& e) {
    return e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number();
  };
  auto is_pairs = [&](const json& v) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!is_pair(e)) return false;
    return true;
  };
  auto check_criterion = [&](const json& obj) {
    need(obj, "criterion", is_obj, "an object");
    if (obj.contains("criterion") && obj.at("criterion").is_object()) {
      const json& c = obj.at("criterion");
      need(c, "passes", is_bool, "a boolean");
      need(c, "margin", is_num_or_null, "a number or null");
      need(c, "witness", [&](const json& v) { return v.is_null() || is_pair(v); },
           "a pair or null");
    }
  };

  switch (kind) {
    case ReportKind::CheckGraph:
      need(j, "n", is_num, "a number");
      need(j, "connected", is_bool, "a boolean");
      need(j, "balanced", is_bool, "a boolean");
      need(j, "max_imbalance", is_num, "a number");
      need(j, "sym_eigvals", is_arr, "an array");
      [[fallthrough]];
    case ReportKind::Analyze:
      need(j, "eigvals", is_pairs, "an array of [re, im] pairs");
      need(j, "lambda_star_sym", is_num, "a number");
      check_criterion(j);
      break;
    case ReportKind::SelectParams:
      for (const char* k : {"beta_star", "beta", "alpha", "h_at_beta", "K", "lambda_star_sym"})
        need(j, k, is_num, "a number");
      need(j, "K_provenance", is_obj, "an object");
      if (j.contains("h_at_beta") && j.at("h_at_beta").is_number() && !(j.at("h_at_beta").get<double>() < 0.0))
        problems.push_back("'h_at_beta' is not negative");
      break;
    case ReportKind::Summary:
      need(j, "converged", is_bool, "a boolean");
      need(j, "verdict", is_str, "a string");
      need(j, "t_detect", is_num_or_null, "a number or null");
      need(j, "agreement_value", is_arr, "an array");
      need(j, "final_V", is_num_or_null, "a number or null");
      need(j, "certificate", is_obj, "an object");
      need(j, "spec_hash", is_str, "a string");
      break;
    case ReportKind::Counterexample:
      check_criterion(j);
      need(j, "linear_eigvals", is_pairs, "an array of [re, im] pairs");
      need(j, "max_eigen_match_error", is_num, "a number");
      need(j, "max_linear_real_part", is_num, "a number");
      need(j, "runs", is_arr, "an array");
      break;
  }
  return problems;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.samples.empty()) return;
  const auto nd = traj.samples.front().state.x.size();
  os << 't';
  for (Eigen::Index i = 0; i < nd; ++i) os << ",x_" << i;
  for (Eigen::Index i = 0; i < nd; ++i) os << ",z_" << i;
  os << ",V,Lx_norm,rhs_norm\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.state.t);
    for (double v : s.state.x) os << ',' << format_double(v);
    for (double v : s.state.z) os << ',' << format_double(v);
    os << ',' << format_double(s.v) << ',' << format_double(s.lx_norm) << ','
       << format_double(s.rhs_norm) << '\n';
  }
}

void write_plot_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.samples.empty()) return;
  const auto nd = traj.samples.front().state.x.size();
  os << "series,t,value\n";
  for (Eigen::Index i = 0; i < nd; ++i)
    for (const auto& s : traj.samples)
      os << "x_" << i << ',' << format_double(s.state.t) << ',' << format_double(s.state.x(i)) << '\n';
  for (Eigen::Index i = 0; i < nd; ++i)
    for (const auto& s : traj.samples)
      os << "z_" << i << ',' << format_double(s.state.t) << ',' << format_double(s.state.z(i)) << '\n';
  for (const auto& s : traj.samples)
    os << "V," << format_double(s.state.t) << ',' << format_double(s.v) << '\n';
}

}  // namespace dgopt
