#ifndef DGOPT_IO_HPP
#define DGOPT_IO_HPP

#include "dgopt/analysis.hpp"
#include "dgopt/dynamics.hpp"
#include "dgopt/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dgopt {

using json = nlohmann::json;

/// {"n": int, "adjacency": [[...]]} or {"n": int, "edges": [[i, j, w], ...]}.
WeightedDigraph graph_from_json(const json& j);
json graph_to_json(const WeightedDigraph& g);

/// [lo, hi] (same interval on every axis) or {"lower": [...], "upper": [...]}.
Box box_from_json(const json& j, int d);

/// {"expr": "...", "K"?: k, "box"?: box} or {"builtin": name, ...} with
/// builtins quadratic {k, center}, abs {center}, power {m}, constant {c},
/// exp {a}. `default_box` is used for K estimation when the entry has none.
ObjectiveFunction objective_from_json(const json& j, const std::optional<Box>& default_box);

struct OutputPaths {
  std::string csv_path = "trajectory.csv";
  std::string summary_path = "summary.json";
  std::string plot_path = "plot_data.csv";
};

/// Parsed experiment configuration (also accepts a bare graph document).
struct ExperimentConfig {
  explicit ExperimentConfig(WeightedDigraph g) : graph(std::move(g)) {}

  WeightedDigraph graph;
  int dimension = 1;
  std::optional<NetworkObjective> objectives;
  Variant variant = Variant::AlphaDirected;
  std::optional<double> alpha;  // nullopt means select automatically
  std::optional<double> beta;
  double safety = kDefaultSafety;
  std::optional<double> lipschitz_override;
  std::optional<Box> box;
  double balance_tol = kDefaultBalanceTol;
  std::optional<Eigen::VectorXd> x0;
  std::optional<Eigen::VectorXd> z0;
  IntegratorConfig integrator;
  OutputPaths output;
  std::uint64_t seed = 0;
};

/// Throws InputError (or json::exception) on malformed input.
ExperimentConfig experiment_config_from_json(const json& j);

/// Experiment config of a named built-in scenario ("figure-1"). Throws
/// InputError for an unknown name.
json builtin_config(const std::string& name);

/// Network K: the override if set, else max_i K_i. Throws InputError if
/// unavailable or not positive.
struct LipschitzChoice {
  double k = 0.0;
  std::string source;  // "override", "objectives"
};
LipschitzChoice choose_lipschitz(const ExperimentConfig& cfg);

// Reports ------------------------------------------------------------------

json complex_to_json(std::complex<double> c);
json criterion_to_json(const CriterionVerdict& v);
json check_graph_report(const WeightedDigraph& g, const LaplacianBundle& bundle,
                        const CriterionVerdict& verdict);
json analyze_report(const LaplacianBundle& bundle, const CriterionVerdict& verdict);
json select_params_report(const ParameterSelection& sel, const LipschitzChoice& k,
                          const ExperimentConfig& cfg);
json simulation_summary(const DynamicsSpec& spec, const ExperimentResult& result,
                        const IntegratorConfig& integrator);
json counterexample_report(const CounterexampleReport& report);

enum class ReportKind { CheckGraph, Analyze, SelectParams, Summary, Counterexample };

/// Names of missing or mistyped fields; empty when the report is valid.
std::vector<std::string> validate_report(const json& j, ReportKind kind);

// CSV ----------------------------------------------------------------------

/// t, x_0..x_{nd−1}, z_0..z_{nd−1}, V, Lx_norm, rhs_norm with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Long format (series, t, value) for every x component, z component and V.
void write_plot_csv(std::ostream& os, const Trajectory& traj);

std::string format_double(double v);

}  // namespace dgopt

#endif  // DGOPT_IO_HPP
