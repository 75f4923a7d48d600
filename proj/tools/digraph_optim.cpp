// Command-line front end: graph checks, parameter selection, simulations and
// built-in reproductions. Exit codes: 0 ok, 2 input error, 3 divergence.

#include "dgopt/errors.hpp"
#include "dgopt/io.hpp"
#include "dgopt/sim.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace dgopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDivergence = 3;

struct GlobalFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::uint64_t> seed;
  std::optional<double> k_override;
  std::optional<double> safety;
  std::string reproduce_name;
};

json load_json(const std::string& path) {
  if (path.empty()) throw InputError("--config PATH is required");
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

fs::path output_dir(const GlobalFlags& flags) {
  if (const char* env = std::getenv("DIGRAPH_OPTIM_OUT"); env && *env) return fs::path(env);
  return fs::path(flags.out_dir);
}

std::ofstream open_for_write(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw InputError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

void apply_overrides(ExperimentConfig& cfg, const GlobalFlags& flags) {
  if (flags.dt) cfg.integrator.dt = *flags.dt;
  if (flags.t_final) cfg.integrator.t_final = *flags.t_final;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.k_override) cfg.lipschitz_override = *flags.k_override;
  if (flags.safety) cfg.safety = *flags.safety;
}

int cmd_check_graph(const GlobalFlags& flags) {
  const ExperimentConfig cfg = experiment_config_from_json(load_json(flags.config_path));
  const LaplacianBundle bundle = build_laplacian(cfg.graph, 1, cfg.balance_tol);
  const CriterionVerdict verdict = check_necessary_condition(bundle);
  std::cout << check_graph_report(cfg.graph, bundle, verdict).dump(2) << '\n';
  return kExitOk;
}

int cmd_analyze(const GlobalFlags& flags) {
  const ExperimentConfig cfg = experiment_config_from_json(load_json(flags.config_path));
  const LaplacianBundle bundle = build_laplacian(cfg.graph, cfg.dimension, cfg.balance_tol);
  std::cout << analyze_report(bundle, check_necessary_condition(bundle)).dump(2) << '\n';
  return kExitOk;
}

int cmd_select_params(const GlobalFlags& flags) {
  ExperimentConfig cfg = experiment_config_from_json(load_json(flags.config_path));
  apply_overrides(cfg, flags);
  const LaplacianBundle bundle = build_laplacian(cfg.graph, cfg.dimension, cfg.balance_tol);
  const LipschitzChoice k = choose_lipschitz(cfg);
  const ParameterSelection sel = select_parameters(bundle, k.k, cfg.safety);
  std::cout << select_params_report(sel, k, cfg).dump(2) << '\n';
  return kExitOk;
}

DynamicsSpec make_spec(const ExperimentConfig& cfg, const LaplacianBundle& bundle) {
  const NetworkObjective objective =
      cfg.objectives ? *cfg.objectives : NetworkObjective::zero(cfg.graph.size(), cfg.dimension);
  if (cfg.variant == Variant::SaddlePoint) return DynamicsSpec(Variant::SaddlePoint, bundle, objective);
  if (!cfg.alpha) {
    const ParameterSelection sel = select_parameters(bundle, choose_lipschitz(cfg).k, cfg.safety);
    return DynamicsSpec(Variant::AlphaDirected, bundle, objective, sel.alpha, sel.beta);
  }
  if (cfg.beta) return DynamicsSpec(Variant::AlphaDirected, bundle, objective, *cfg.alpha, cfg.beta);
  if (beta_from_alpha(*cfg.alpha)) return DynamicsSpec::alpha_directed(bundle, objective, *cfg.alpha);
  return DynamicsSpec(Variant::AlphaDirected, bundle, objective, *cfg.alpha);
}

int run_simulation(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const LaplacianBundle bundle = build_laplacian(cfg.graph, cfg.dimension, cfg.balance_tol);
  const DynamicsSpec spec = make_spec(cfg, bundle);
  const int nd = spec.nd();

  SimState s0;
  s0.x = cfg.x0 ? *cfg.x0 : Eigen::VectorXd::Zero(nd).eval();
  s0.z = cfg.z0 ? *cfg.z0 : Eigen::VectorXd::Zero(nd).eval();

  // Fail on unwritable paths before integrating.
  std::ofstream csv = open_for_write(out_dir / cfg.output.csv_path);
  std::ofstream plot = open_for_write(out_dir / cfg.output.plot_path);
  std::ofstream summary_out = open_for_write(out_dir / cfg.output.summary_path);

  ExperimentOptions options;
  options.oracle_box = cfg.box;
  const ExperimentResult result = run_experiment(spec, s0, cfg.integrator, options);

  write_trajectory_csv(csv, result.trajectory);
  write_plot_csv(plot, result.trajectory);

  json summary = simulation_summary(spec, result, cfg.integrator);
  if (cfg.box && cfg.box->dimension() == spec.d()) {
    json checks = json::array();
    for (const auto& part : spec.objective().parts()) {
      const ConvexityReport rep = check_convexity(part, 1000, *cfg.box, cfg.seed);
      checks.push_back({{"objective", part.description()}, {"violations", rep.violations}});
    }
    summary["convexity_checks"] = std::move(checks);
    summary["seed"] = cfg.seed;
  }
  summary_out << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_simulate(const GlobalFlags& flags) {
  ExperimentConfig cfg = experiment_config_from_json(load_json(flags.config_path));
  apply_overrides(cfg, flags);
  return run_simulation(cfg, output_dir(flags));
}

int cmd_reproduce(const GlobalFlags& flags) {
  const fs::path out = output_dir(flags);
  if (flags.reproduce_name == "figure-1") {
    const json raw = builtin_config("figure-1");
    std::ofstream cfg_out = open_for_write(out / "figure-1-config.json");
    cfg_out << raw.dump(2) << '\n';
    ExperimentConfig cfg = experiment_config_from_json(raw);
    apply_overrides(cfg, flags);
    return run_simulation(cfg, out);
  }
  if (flags.reproduce_name == "example-5-2") {
    const WeightedDigraph g = scenarios::example_graph();
    // The printed weights carry four decimals.
    const LaplacianBundle bundle = build_laplacian(g, 1, 1e-3);
    CounterexampleOptions options;
    if (flags.dt) options.integrator.dt = *flags.dt;
    if (flags.t_final) options.integrator.t_final = *flags.t_final;
    std::ofstream report_out = open_for_write(out / "example-5-2.json");
    const json report = {
        {"check_graph", check_graph_report(g, bundle, check_necessary_condition(bundle))},
        {"counterexample", counterexample_report(counterexample_suite(g, options))}};
    report_out << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    return kExitOk;
  }
  throw InputError("unknown scenario '" + flags.reproduce_name +
                   "' (expected example-5-2 or figure-1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed convex optimization over weighted digraphs"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "Experiment or graph JSON");
  app.add_option("--out", flags.out_dir, "Output directory (DIGRAPH_OPTIM_OUT overrides)");
  app.add_option("--dt", flags.dt, "Integration step");
  app.add_option("--t-final", flags.t_final, "Integration horizon");
  app.add_option("--seed", flags.seed, "Seed for sampled checks");

  auto* check = app.add_subcommand("check-graph", "Connectivity, balance, spectra and the spectral test");
  auto* analyze = app.add_subcommand("analyze", "Laplacian spectrum and the spectral test as JSON");
  auto* select = app.add_subcommand("select-params", "Choose beta and alpha for the alpha-dynamics");
  select->add_option("--K", flags.k_override, "Gradient Lipschitz constant to use");
  select->add_option("--safety", flags.safety, "beta = safety * beta_star, in (0, 1)");
  auto* simulate = app.add_subcommand("simulate", "Integrate a configured experiment");
  auto* reproduce = app.add_subcommand("reproduce", "Run a built-in scenario");
  reproduce->add_option("name", flags.reproduce_name, "example-5-2 or figure-1")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*check) return cmd_check_graph(flags);
    if (*analyze) return cmd_analyze(flags);
    if (*select) return cmd_select_params(flags);
    if (*simulate) return cmd_simulate(flags);
    if (*reproduce) return cmd_reproduce(flags);
  } catch (const DivergenceError& e) {
    std::cerr << "error: divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitInput;
}
