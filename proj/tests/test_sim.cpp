#include "dgopt/errors.hpp"
#include "dgopt/sim.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dgopt;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

LaplacianBundle example_bundle() {
  return build_laplacian(WeightedDigraph(oracle::example_adjacency()), 1, 1e-3);
}

WeightedDigraph path_graph(int n) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i + 1 < n; ++i) {
    edges.emplace_back(i, i + 1, 1.0);
    edges.emplace_back(i + 1, i, 1.0);
  }
  return WeightedDigraph::from_edges(n, edges);
}

Trajectory synthetic(const std::vector<std::pair<double, double>>& lx_rhs, double spread) {
  // Samples at t = 0..N−1 with the given ‖Lx‖ and ‖rhs‖ and x = (spread, −spread).
  Trajectory traj;
  for (std::size_t k = 0; k < lx_rhs.size(); ++k) {
    TrajectorySample s;
    s.state = SimState{static_cast<double>(k), Eigen::Vector2d(spread, -spread), Eigen::Vector2d::Zero()};
    s.lx_norm = lx_rhs[k].first;
    s.rhs_norm = lx_rhs[k].second;
    traj.samples.push_back(s);
  }
  return traj;
}

}  // namespace

TEST(Oracle, Examples) {
  const NetworkObjective sym({builtin::quadratic(1, 3), builtin::quadratic(1, -3)});
  EXPECT_NEAR(centralized_oracle(sym, Box::interval(-10, 10))(0), 0.0, 1e-8);

  const NetworkObjective fig = scenarios::figure_objectives();
  EXPECT_NEAR(centralized_oracle(fig, Box::interval(-3, 3), 1e-10)(0), oracle::figure_root(), 1e-6);

  const NetworkObjective med({builtin::absolute(0), builtin::absolute(1), builtin::absolute(2)});
  EXPECT_NEAR(centralized_oracle(med, Box::interval(-5, 5))(0), oracle::median({0, 1, 2}), 1e-8);
}

TEST(Oracle, MultiDimensional) {
  std::vector<ObjectiveFunction> parts;
  parts.push_back(separable({builtin::quadratic(1, 1), builtin::absolute(2)}));
  parts.push_back(separable({builtin::quadratic(2, -2), builtin::absolute(-1)}));
  parts.push_back(separable({builtin::constant(0), builtin::absolute(0.5)}));
  const NetworkObjective f(parts);
  // Coordinate 0: minimize (x − 1)² + 2(x + 2)², root x = −1. Coordinate 1: median of {2, −1, 0.5}.
  const Eigen::VectorXd x = centralized_oracle(f, Box::cube(2, -5, 5), 1e-9);
  EXPECT_NEAR(x(0), -1.0, 1e-3);
  EXPECT_NEAR(x(1), 0.5, 1e-3);
  EXPECT_LE(f.sum_at(x) - f.sum_at(Eigen::Vector2d(-1.0, 0.5)), 1e-6);
}

TEST(Oracle, RejectsBadBox) {
  const NetworkObjective f({builtin::quadratic(1, 0)});
  EXPECT_THROW(centralized_oracle(f, Box::cube(2, -1, 1)), InputError);
  EXPECT_THROW(centralized_oracle(f, Box{vec1(1), vec1(-1)}), InputError);
}

TEST(Certificate, ReportedFigureEquilibrium) {
  const Equilibrium eq = scenarios::figure_reported_equilibrium();
  const SaddleCertificate c =
      certify_saddle_point(example_bundle(), scenarios::figure_objectives(), eq.x, eq.z, 2e-2);
  EXPECT_TRUE(c.hypotheses_hold);
  EXPECT_LE(c.agreement_residual, 2e-2);
  EXPECT_LE(c.stationarity_residual, 2e-2);
  EXPECT_LE(c.optimality_residual, 2e-2);
}

TEST(Certificate, HandBuiltTwoNodeEquilibrium) {
  const LaplacianBundle b = build_laplacian(path_graph(2), 1);
  const NetworkObjective f({builtin::quadratic(1, 1), builtin::quadratic(1, -1)});
  // L z* = −g(0) = (2, −2) with z*₁ + z*₂ = 0.
  const Eigen::Vector2d z_star(1.0, -1.0);
  const SaddleCertificate c = certify_saddle_point(b, f, Eigen::Vector2d::Zero(), z_star, 1e-12);
  EXPECT_TRUE(c.passes());
  EXPECT_LE(c.stationarity_residual, 1e-12);

  const Equilibrium eq = equilibrium_from_minimizer(b, f, vec1(0.0), vec1(0.0));
  EXPECT_LE((eq.z - z_star).norm(), 1e-12);

  const SaddleCertificate off = certify_saddle_point(b, f, Eigen::Vector2d(0.5, 0.5), z_star, 1e-6);
  EXPECT_FALSE(off.stationarity_ok());
  EXPECT_GT(off.stationarity_residual, 1e-6);
}

TEST(Assess, Verdicts) {
  std::vector<std::pair<double, double>> good(100, {1.0, 1.0});
  for (int k = 90; k < 100; ++k) good[k] = {1e-8, 1e-8};
  const RunAssessment ok = assess(synthetic(good, 0.0), 2, 1);
  EXPECT_EQ(ok.verdict, Verdict::Converged);
  EXPECT_DOUBLE_EQ(*ok.t_detect, 90.0);

  std::vector<std::pair<double, double>> short_tail(100, {1.0, 1.0});
  for (int k = 97; k < 100; ++k) short_tail[k] = {1e-8, 1e-8};
  EXPECT_NE(assess(synthetic(short_tail, 0.0), 2, 1).verdict, Verdict::Converged);

  const RunAssessment bad = assess(synthetic(std::vector<std::pair<double, double>>(100, {1.0, 1.0}), 0.5), 2, 1);
  EXPECT_EQ(bad.verdict, Verdict::NonConvergent);
  EXPECT_NEAR(bad.tail_min_agreement_distance, std::sqrt(0.5), 1e-12);

  EXPECT_EQ(assess(synthetic(std::vector<std::pair<double, double>>(100, {1.0, 1.0}), 0.0), 2, 1).verdict,
            Verdict::Inconclusive);
}

TEST(Experiment, HypothesesCheckedBeforeRunning) {
  const auto one_way = build_laplacian(WeightedDigraph::from_edges(2, {{0, 1, 1.0}}), 1);
  const DynamicsSpec spec(Variant::SaddlePoint, one_way, NetworkObjective::zero(2, 1));
  const SimState s0{0.0, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  EXPECT_THROW(run_experiment(spec, s0, {}), InputError);

  // Strongly connected but unbalanced: the α-dynamics is refused.
  const auto unbalanced = build_laplacian(WeightedDigraph::from_edges(2, {{0, 1, 1.0}, {1, 0, 2.0}}), 1);
  const DynamicsSpec alpha(Variant::AlphaDirected, unbalanced, NetworkObjective::zero(2, 1), 3.0);
  EXPECT_THROW(run_experiment(alpha, s0, {}), InputError);

  const LaplacianBundle b = build_laplacian(path_graph(2), 1);
  // Without a box the oracle is skipped rather than guessed.
  const DynamicsSpec no_box(Variant::SaddlePoint, b, NetworkObjective({builtin::quadratic(1, 0), builtin::quadratic(1, 1)}));
  const ExperimentResult r = run_experiment(no_box, s0, {IntegratorMethod::RK4, 1e-2, 1.0, 10, true});
  EXPECT_FALSE(r.oracle_value.has_value());
  EXPECT_FALSE(r.equilibrium.has_value());
}

TEST(Experiment, OracleConsistencyOnFigureSetup) {
  const DynamicsSpec spec = DynamicsSpec::alpha_directed(example_bundle(), scenarios::figure_objectives(), 3.0);
  ExperimentOptions options;
  options.oracle_box = Box::interval(-3, 3);
  const ExperimentResult r = run_experiment(spec, scenarios::figure_initial_state(),
                                            {IntegratorMethod::RK4, 1e-3, 100.0, 10, true}, options);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.trajectory.final().lx_norm, options.criteria.agree_tol);
  EXPECT_LE(r.trajectory.final().rhs_norm, options.criteria.rate_tol);
  EXPECT_LE(*r.oracle_gap, 1e-2);
  EXPECT_LE(*r.objective_gap, 1e-4);
  EXPECT_NEAR(r.agreement_value(0), oracle::figure_root(), 1e-6);
  EXPECT_TRUE(r.certificate.passes());
  EXPECT_EQ(r.trajectory.meta.lyapunov_violations, 0);
  // The fixed point of the integrator is a genuine equilibrium.
  const auto [dx, dz] = rhs(spec, SimState{0.0, r.equilibrium->x, r.equilibrium->z});
  EXPECT_LE(std::sqrt(dx.squaredNorm() + dz.squaredNorm()), 1e-8);
}

TEST(Experiment, MedianOnUndirectedPath) {
  const std::vector<double> a = {-3.0, 0.5, 1.0, 4.0, 7.0};
  std::vector<ObjectiveFunction> parts;
  for (double c : a) parts.push_back(builtin::absolute(c));
  const DynamicsSpec spec(Variant::SaddlePoint, build_laplacian(path_graph(5), 1), NetworkObjective(parts));
  ExperimentOptions options;
  options.oracle_box = Box::interval(-10, 10);
  const SimState s0{0.0, Eigen::VectorXd::LinSpaced(5, -1, 1), Eigen::VectorXd::Zero(5)};
  const ExperimentResult r = run_experiment(spec, s0, {IntegratorMethod::Euler, 1e-3, 100.0, 100, true}, options);
  EXPECT_NEAR(r.agreement_value(0), oracle::median(a), 1e-3);
  EXPECT_NEAR((*r.oracle_value)(0), oracle::median(a), 1e-8);
}

TEST(Experiment, FlatMinimizerSetOnlyOptimalityAndAgreement) {
  // |x − 1| + |x + 1| is minimized by every point of [−1, 1].
  const DynamicsSpec spec(Variant::SaddlePoint, build_laplacian(path_graph(2), 1),
                          NetworkObjective({builtin::absolute(1.0), builtin::absolute(-1.0)}));
  ExperimentOptions options;
  options.oracle_box = Box::interval(-5, 5);
  const SimState s0{0.0, Eigen::Vector2d(3.0, -0.5), Eigen::Vector2d::Zero()};
  const ExperimentResult r = run_experiment(spec, s0, {IntegratorMethod::Euler, 1e-3, 60.0, 100, true}, options);
  const double fbar = spec.objective().sum_at(r.agreement_value);
  EXPECT_LE(fbar - 2.0, 1e-3);
  EXPECT_LE(agreement_distance(r.trajectory.final().state.x, 2, 1), 1e-2);
}

TEST(Counterexample, ExampleGraph) {
  const CounterexampleReport rep = counterexample_suite(scenarios::example_graph());
  EXPECT_FALSE(rep.criterion.passes);
  EXPECT_LE(rep.max_eigen_match_error, 1e-8);
  EXPECT_NEAR(rep.max_linear_real_part, 0.5 * 0.0171, 1e-3);
  ASSERT_EQ(rep.runs.size(), 3u);
  EXPECT_EQ(rep.runs[0].variant, Variant::SaddlePoint);
  EXPECT_EQ(rep.runs[0].assessment.verdict, Verdict::NonConvergent);
  EXPECT_EQ(rep.runs[1].variant, Variant::AlphaDirected);
  EXPECT_EQ(rep.runs[1].assessment.verdict, Verdict::Converged);
  EXPECT_EQ(rep.runs[2].assessment.verdict, Verdict::Converged);
}

TEST(Counterexample, PredictedEigenvaluesOnRandomGraphs) {
  const CounterexampleReport rep = counterexample_suite(
      WeightedDigraph::from_edges(3, {{0, 1, 1}, {1, 2, 2}, {2, 0, 0.5}, {1, 0, 0.3}}),
      {3.0, {IntegratorMethod::Auto, 1e-2, 5.0, 10, true}, std::nullopt, std::nullopt, {}});
  EXPECT_LE(rep.max_eigen_match_error, 1e-8);
}

TEST(Scenarios, FigureSetup) {
  const SimState s = scenarios::figure_initial_state();
  EXPECT_TRUE(s.x.isApprox((Eigen::VectorXd(5) << 1, 2, 0.3, 1, 1).finished()));
  EXPECT_TRUE(s.z.isApprox(Eigen::VectorXd::Ones(5)));
  // The reported equilibrium preserves the z-sum of the initial state up to print rounding.
  EXPECT_NEAR(scenarios::figure_reported_equilibrium().z.sum(), 5.0, 1e-3);
}
