#ifndef DGOPT_SIM_HPP
#define DGOPT_SIM_HPP

#include "dgopt/analysis.hpp"
#include "dgopt/dynamics.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace dgopt {

/// Thresholds for reading a verdict off a recorded trajectory.
struct ConvergenceCriteria {
  double agree_tol = 1e-6;           // ‖𝐋x‖
  double rate_tol = 1e-5;            // ‖(ẋ, ż)‖
  double sustain_fraction = 0.05;    // of the horizon, ending at t_final
  double tail_fraction = 0.25;       // window for the non-convergence test
  double nonconvergence_dist = 1e-6; // inf of dist(x, agreement) over the tail
};

enum class Verdict { Converged, NonConvergent, Inconclusive };

const char* to_string(Verdict v);

struct RunAssessment {
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> t_detect;       // start of the sustained convergent stretch
  double tail_min_agreement_distance = 0.0;
  double final_lx_norm = 0.0;
  double final_rhs_norm = 0.0;
  bool diverged = false;
  std::optional<double> divergence_time;
};

/// Converged if ‖𝐋x‖ <= agree_tol and ‖rhs‖ <= rate_tol on every sample of
/// a final stretch covering at least sustain_fraction of the horizon.
/// Otherwise non-convergent if dist(x, agreement) stays above
/// nonconvergence_dist throughout the final tail_fraction of the horizon.
RunAssessment assess(const Trajectory& traj, int n, int d, const ConvergenceCriteria& criteria = {});

/// Stationarity residuals of a candidate saddle point (x, z):
/// (a) ‖𝐋x‖, (b) ‖𝐋z + g̃(x)‖, (c) ‖Σ_i g^i(x̄)‖ at the blockwise mean x̄.
struct SaddleCertificate {
  double tol = 0.0;
  double agreement_residual = 0.0;
  double stationarity_residual = 0.0;
  double optimality_residual = 0.0;
  bool hypotheses_hold = false;  // weight-balanced and strongly connected

  bool agreement_ok() const { return agreement_residual <= tol; }
  bool stationarity_ok() const { return stationarity_residual <= tol; }
  bool optimality_ok() const { return optimality_residual <= tol; }
  bool passes() const { return agreement_ok() && stationarity_ok() && optimality_ok(); }
};

SaddleCertificate certify_saddle_point(const LaplacianBundle& bundle, const NetworkObjective& objective,
                                       const Eigen::VectorXd& x, const Eigen::VectorXd& z, double tol);

/// Minimizer of f = Σ_i f^i over the box using only evaluations of the sum.
/// d = 1: golden-section search down to an interval of width tol.
/// d > 1: projected subgradient descent with diminishing steps from several
/// deterministic starts, keeping the best point.
Eigen::VectorXd centralized_oracle(const NetworkObjective& objective, const Box& box, double tol = 1e-9);

/// Saddle point (1 ⊗ x*, z*) with 𝐋z* = −g̃(1 ⊗ x*) and Σ_i z*^i equal to
/// z_sum. Least squares, so the residual is zero only for an exact x*.
Equilibrium equilibrium_from_minimizer(const LaplacianBundle& bundle, const NetworkObjective& objective,
                                       const Eigen::VectorXd& minimizer, const Eigen::VectorXd& z_sum);

struct ExperimentOptions {
  std::optional<Box> oracle_box;  // required unless the objectives are all constant
  double oracle_tol = 1e-9;
  double certify_tol = 1e-4;
  ConvergenceCriteria criteria;
};

struct ExperimentResult {
  Trajectory trajectory;
  RunAssessment assessment;
  bool converged = false;
  Eigen::VectorXd agreement_value;          // blockwise mean of the final x
  std::optional<Eigen::VectorXd> oracle_value;
  std::optional<double> oracle_gap;         // ‖agreement − oracle‖_∞
  std::optional<double> objective_gap;      // f(agreement) − f(oracle)
  std::optional<Equilibrium> equilibrium;   // reference point for V
  SaddleCertificate certificate;
};

/// Checks the hypotheses (strong connectivity; weight balance for the
/// α-dynamics) and throws InputError before running if they fail. Then
/// integrates with V measured against the oracle equilibrium, assesses
/// convergence and certifies the final state.
ExperimentResult run_experiment(const DynamicsSpec& spec, const SimState& s0,
                                const IntegratorConfig& cfg, const ExperimentOptions& options = {});

struct RunReport {
  std::string label;
  Variant variant = Variant::SaddlePoint;
  double alpha = 1.0;
  RunAssessment assessment;
};

struct CounterexampleReport {
  CriterionVerdict criterion;
  Eigen::VectorXcd linear_eigvals;     // spectrum of [[−1, −1], [1, 0]] ⊗ 𝐋
  double max_eigen_match_error = 0.0;  // vs λ·(−½ ± (√3/2)i), λ in spec(𝐋)
  double max_linear_real_part = 0.0;
  std::vector<RunReport> runs;         // saddle point, α-dynamics, symmetrized saddle point
};

struct CounterexampleOptions {
  double alpha = 3.0;
  IntegratorConfig integrator{IntegratorMethod::Auto, 1e-3, 100.0, 10, true};
  std::optional<Eigen::VectorXd> x0;  // default: (1, 2, 0.3, 1, 1, ...) pattern
  std::optional<Eigen::VectorXd> z0;  // default: ones
  ConvergenceCriteria criteria;
};

/// Zero-objective study of a graph: lifted linear spectrum, its predicted
/// form, and simulated verdicts of both dynamics plus the saddle-point
/// dynamics on the symmetrized graph.
CounterexampleReport counterexample_suite(const WeightedDigraph& graph,
                                          const CounterexampleOptions& options = {});

/// Built-in scenarios.
namespace scenarios {

/// 5-agent weight-balanced digraph whose Laplacian fails the spectral test.
WeightedDigraph example_graph();

/// e^x, (x − 3)², (x + 3)², x⁴ and the constant 4, in agent order.
NetworkObjective figure_objectives(const std::optional<Box>& box = Box::interval(-3.0, 3.0));

/// x0 = (1, 2, 0.3, 1, 1), z0 = 1.
SimState figure_initial_state();

/// Equilibrium printed with the reference run: x* = −0.2005·1 and z* below.
Equilibrium figure_reported_equilibrium();

}  // namespace scenarios

}  // namespace dgopt

#endif  // DGOPT_SIM_HPP
