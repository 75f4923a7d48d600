#include "dgopt/analysis.hpp"
#include "dgopt/dynamics.hpp"
#include "dgopt/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <random>

using namespace dgopt;

namespace {

LaplacianBundle example_bundle(int d = 1) {
  return build_laplacian(WeightedDigraph(oracle::example_adjacency()), d, 1e-3);
}

LaplacianBundle two_node_bundle() {
  return build_laplacian(WeightedDigraph::from_edges(2, {{0, 1, 1.0}, {1, 0, 1.0}}), 1);
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int size) {
  std::normal_distribution<double> nrm;
  Eigen::VectorXd v(size);
  for (auto& x : v) x = nrm(rng);
  return v;
}

}  // namespace

TEST(DynamicsSpec, Validation) {
  const LaplacianBundle b = example_bundle();
  EXPECT_THROW(DynamicsSpec(Variant::SaddlePoint, b, NetworkObjective::zero(4, 1)), InputError);
  EXPECT_THROW(DynamicsSpec(Variant::SaddlePoint, b, NetworkObjective::zero(5, 2)), InputError);
  EXPECT_THROW(DynamicsSpec(Variant::AlphaDirected, b, NetworkObjective::zero(5, 1), 0.0), InputError);
  std::vector<ObjectiveFunction> kinks(5, builtin::absolute(0.0));
  EXPECT_THROW(DynamicsSpec(Variant::AlphaDirected, b, NetworkObjective(kinks), 3.0), InputError);
  EXPECT_NO_THROW(DynamicsSpec(Variant::SaddlePoint, b, NetworkObjective(kinks)));
  EXPECT_THROW(DynamicsSpec(Variant::AlphaDirected, b, NetworkObjective::zero(5, 1), 3.0, 1.5), InputError);
  EXPECT_NO_THROW(DynamicsSpec(Variant::AlphaDirected, b, NetworkObjective::zero(5, 1), 3.0, 2.0));
  const DynamicsSpec spec = DynamicsSpec::alpha_directed(b, NetworkObjective::zero(5, 1), 3.0);
  EXPECT_DOUBLE_EQ(*spec.beta(), 1.0);
  EXPECT_THROW(DynamicsSpec::alpha_directed(b, NetworkObjective::zero(5, 1), 2.0), InputError);
  EXPECT_EQ(variant_from_string("saddle_point"), Variant::SaddlePoint);
  EXPECT_THROW(variant_from_string("eq8"), InputError);
}

TEST(Rhs, AgreementSetIsEquilibriumForZeroObjectives) {
  for (int d : {1, 2}) {
    const LaplacianBundle b = example_bundle(d);
    const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective::zero(5, d));
    Eigen::VectorXd a(d), c(d);
    a.setLinSpaced(0.3, 1.1);
    c.setLinSpaced(-2.0, 0.7);
    const SimState s{0.0, a.replicate(5, 1), c.replicate(5, 1)};
    const auto [dx, dz] = rhs(spec, s);
    EXPECT_LE(dx.norm(), 1e-15);
    EXPECT_LE(dz.norm(), 1e-15);
  }
}

TEST(Rhs, ZeroObjectiveSaddleDynamicsIsLinear) {
  std::mt19937_64 rng(2);
  for (int d : {1, 3}) {
    const LaplacianBundle b = example_bundle(d);
    const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective::zero(5, d));
    Eigen::Matrix2d block;
    block << -1, -1, 1, 0;
    const Eigen::MatrixXd lifted =
        Eigen::kroneckerProduct(oracle::laplacian_loops(oracle::example_adjacency()), Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd m = Eigen::kroneckerProduct(block, lifted);
    EXPECT_TRUE(saddle_linear_matrix(b).isApprox(m));
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd x = random_vector(rng, 5 * d);
      const Eigen::VectorXd z = random_vector(rng, 5 * d);
      Eigen::VectorXd stacked(10 * d);
      stacked << x, z;
      const Eigen::VectorXd expected = m * stacked;
      const auto [dx, dz] = rhs(spec, SimState{0.0, x, z});
      EXPECT_LE((dx - expected.head(5 * d)).norm(), 1e-12);
      EXPECT_LE((dz - expected.tail(5 * d)).norm(), 1e-12);
    }
  }
}

TEST(Rhs, AlphaVariantUsesGain) {
  std::mt19937_64 rng(3);
  const LaplacianBundle b = example_bundle();
  const NetworkObjective f({builtin::quadratic(1, 0), builtin::quadratic(2, 1), builtin::exponential(1),
                            builtin::power(2), builtin::constant(1)});
  const DynamicsSpec spec(Variant::AlphaDirected, b, f, 4.0);
  const Eigen::MatrixXd l = oracle::laplacian_loops(oracle::example_adjacency());
  const Eigen::VectorXd x = random_vector(rng, 5), z = random_vector(rng, 5);
  Eigen::VectorXd g(5);
  g << 2 * x(0), 4 * (x(1) - 1), std::exp(x(2)), 4 * std::pow(x(3), 3), 0.0;
  const auto [dx, dz] = rhs(spec, SimState{0.0, x, z});
  EXPECT_LE((dx - (-4.0 * l * x - l * z - g)).norm(), 1e-12);
  EXPECT_LE((dz - l * x).norm(), 1e-12);
}

TEST(Rhs, NonFiniteGradientIsDivergence) {
  const LaplacianBundle b = two_node_bundle();
  const NetworkObjective f({builtin::exponential(1.0), builtin::exponential(1.0)});
  const DynamicsSpec spec(Variant::SaddlePoint, b, f);
  try {
    rhs(spec, SimState{2.5, Eigen::Vector2d(1000.0, 0.0), Eigen::Vector2d::Zero()});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_DOUBLE_EQ(e.time(), 2.5);
  }
}

TEST(Rhs, HandBuiltEquilibriumIsFixedPoint) {
  // f¹ = (x − 1)², f² = (x + 1)²: x* = 0, g = (−2, 2), L z* = (2, −2) gives z* = (1, −1).
  const LaplacianBundle b = two_node_bundle();
  const NetworkObjective f({builtin::quadratic(1, 1), builtin::quadratic(1, -1)});
  const DynamicsSpec spec(Variant::SaddlePoint, b, f);
  const auto [dx, dz] = rhs(spec, SimState{0.0, Eigen::Vector2d::Zero(), Eigen::Vector2d(1, -1)});
  EXPECT_LE(dx.norm(), 1e-15);
  EXPECT_LE(dz.norm(), 1e-15);
}

TEST(SaddleFunction, Properties) {
  std::mt19937_64 rng(6);
  const LaplacianBundle b = example_bundle();
  const NetworkObjective zero = NetworkObjective::zero(5, 1);
  const DynamicsSpec spec0(Variant::SaddlePoint, b, zero);
  EXPECT_NEAR(saddle_function(spec0, Eigen::VectorXd::Constant(5, 0.7), random_vector(rng, 5)), 0.0, 1e-14);

  const NetworkObjective f({builtin::quadratic(1, 0), builtin::quadratic(2, 1), builtin::exponential(1),
                            builtin::power(2), builtin::constant(1)});
  const DynamicsSpec spec(Variant::SaddlePoint, b, f);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXd x = random_vector(rng, 5), z1 = random_vector(rng, 5), z2 = random_vector(rng, 5);
    const double lin = saddle_function(spec, x, z1 + z2) - saddle_function(spec, x, z1) -
                       saddle_function(spec, x, z2) + saddle_function(spec, x, Eigen::VectorXd::Zero(5));
    EXPECT_NEAR(lin, 0.0, 1e-9 * (1.0 + std::abs(saddle_function(spec, x, z1))));
    const Eigen::VectorXd x2 = random_vector(rng, 5);
    const double mid = saddle_function(spec, 0.5 * (x + x2), z1);
    EXPECT_LE(mid, 0.5 * (saddle_function(spec, x, z1) + saddle_function(spec, x2, z1)) + 1e-12);
  }
  const auto one_way = build_laplacian(WeightedDigraph::from_edges(2, {{0, 1, 1.0}}), 1);
  const DynamicsSpec unbalanced(Variant::SaddlePoint, one_way, NetworkObjective::zero(2, 1));
  EXPECT_THROW(saddle_function(unbalanced, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()), InputError);
}

TEST(Lyapunov, Examples) {
  const LaplacianBundle b = two_node_bundle();
  const Equilibrium eq{Eigen::Vector2d(0.2, 0.2), Eigen::Vector2d(1, -1)};
  const DynamicsSpec alpha_spec(Variant::AlphaDirected, b, NetworkObjective::zero(2, 1), 3.0, 1.0);
  EXPECT_DOUBLE_EQ(lyapunov_value(alpha_spec, SimState{0, eq.x, eq.z}, eq), 0.0);
  const SimState s{0, eq.x + Eigen::Vector2d(1, 0), eq.z - Eigen::Vector2d(1, 0)};
  EXPECT_DOUBLE_EQ(lyapunov_value(alpha_spec, s, eq), 0.5);
  const DynamicsSpec saddle(Variant::SaddlePoint, b, NetworkObjective::zero(2, 1));
  EXPECT_DOUBLE_EQ(lyapunov_value(saddle, s, eq), 1.0);
  const DynamicsSpec no_beta(Variant::AlphaDirected, b, NetworkObjective::zero(2, 1), 3.0);
  EXPECT_THROW(lyapunov_value(no_beta, s, eq), InputError);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i)
    EXPECT_GE(lyapunov_value(alpha_spec, SimState{0, random_vector(rng, 2), random_vector(rng, 2)}, eq), 0.0);
}

TEST(Integrate, AgreementStartStaysPut) {
  const LaplacianBundle b = example_bundle();
  const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective::zero(5, 1));
  const SimState s0{0.0, Eigen::VectorXd::Constant(5, 0.4), Eigen::VectorXd::Constant(5, -1.2)};
  const Trajectory traj = integrate(spec, s0, {IntegratorMethod::Auto, 1e-3, 10.0, 100, true});
  for (const auto& s : traj.samples) {
    EXPECT_LE((s.state.x - s0.x).lpNorm<Eigen::Infinity>(), 1e-14);
    EXPECT_LE((s.state.z - s0.z).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Integrate, RecordingScheduleAndMetadata) {
  const LaplacianBundle b = example_bundle();
  const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective::zero(5, 1));
  const SimState s0{0.0, Eigen::VectorXd::LinSpaced(5, 0, 1), Eigen::VectorXd::Ones(5)};
  const Trajectory traj = integrate(spec, s0, {IntegratorMethod::Auto, 0.01, 1.05, 10, true});
  EXPECT_EQ(traj.meta.steps, 105);
  EXPECT_EQ(traj.meta.integrator, IntegratorMethod::RK4);
  ASSERT_EQ(traj.samples.size(), 12u);  // steps 0, 10, ..., 100 and 105
  EXPECT_DOUBLE_EQ(traj.samples[1].state.t, 0.1);
  EXPECT_DOUBLE_EQ(traj.final().state.t, 1.05);
  for (std::size_t k = 1; k < traj.samples.size(); ++k)
    EXPECT_GT(traj.samples[k].state.t, traj.samples[k - 1].state.t);
  EXPECT_TRUE(std::isnan(traj.samples[0].v));
  EXPECT_EQ(traj.meta.spec_hash, spec.hash());
}

TEST(Integrate, RejectsBadConfigurations) {
  const LaplacianBundle b = example_bundle();
  const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective::zero(5, 1));
  const SimState s0{0.0, Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(5)};
  EXPECT_THROW(integrate(spec, s0, {IntegratorMethod::Auto, 10.0, 100.0, 1, true}), InputError);
  EXPECT_THROW(integrate(spec, s0, {IntegratorMethod::Auto, -1e-3, 1.0, 1, true}), InputError);
  EXPECT_THROW(integrate(spec, SimState{0.0, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(5)}, {}), InputError);
  std::vector<ObjectiveFunction> kinks(5, builtin::absolute(0.0));
  const DynamicsSpec nonsmooth(Variant::SaddlePoint, b, NetworkObjective(kinks));
  EXPECT_THROW(integrate(nonsmooth, s0, {IntegratorMethod::RK4, 1e-3, 1.0, 1, true}), InputError);
  EXPECT_EQ(integrate(nonsmooth, s0, {IntegratorMethod::Auto, 1e-3, 0.01, 1, true}).meta.integrator,
            IntegratorMethod::Euler);
}

TEST(Integrate, DivergenceReportsFirstBadTime) {
  const LaplacianBundle b = two_node_bundle();
  std::vector<ObjectiveFunction> concave(2, make_objective(parse_expression("-(x^2)")));
  const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective(concave));
  const SimState s0{0.0, Eigen::Vector2d(1, 1), Eigen::Vector2d::Zero()};
  try {
    integrate(spec, s0, {IntegratorMethod::Euler, 1e-2, 1000.0, 1000, true});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    // x grows like e^{2t}, overflowing double near t ≈ 355.
    EXPECT_GT(e.time(), 300.0);
    EXPECT_LT(e.time(), 400.0);
  }
}

TEST(Integrate, ZSumIsConserved) {
  const LaplacianBundle b = example_bundle(2);
  std::vector<ObjectiveFunction> parts;
  for (int i = 0; i < 5; ++i) parts.push_back(separable({builtin::quadratic(1.0, i), builtin::exponential(0.5)}));
  const DynamicsSpec spec = DynamicsSpec::alpha_directed(b, NetworkObjective(parts), 3.0);
  std::mt19937_64 rng(14);
  const SimState s0{0.0, random_vector(rng, 10), random_vector(rng, 10)};
  const Trajectory traj = integrate(spec, s0, {IntegratorMethod::RK4, 1e-3, 100.0, 1000, true});
  EXPECT_LE(traj.meta.max_z_sum_drift, 1e-10);
  EXPECT_LE(traj.meta.max_step_z_sum_drift, 1e-12);
  const Eigen::VectorXd sum0 = block_sum(s0.z, 5, 2);
  EXPECT_LE((block_sum(traj.final().state.z, 5, 2) - sum0).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Integrate, SingleAgentAbsoluteFlowStaysAtMinimizer) {
  const LaplacianBundle b = build_laplacian(WeightedDigraph(Eigen::MatrixXd::Zero(1, 1)), 1);
  const DynamicsSpec spec(Variant::SaddlePoint, b, NetworkObjective({builtin::absolute(0.0)}));
  const SimState s0{0.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  const Trajectory traj = integrate(spec, s0, {IntegratorMethod::Euler, 1e-3, 100.0, 1000, true});
  EXPECT_EQ(traj.meta.steps, 100000);
  for (const auto& s : traj.samples) EXPECT_EQ(s.state.x(0), 0.0);
}

TEST(Integrate, Rk4IsFourthOrder) {
  const LaplacianBundle b = example_bundle();
  const double alpha = 3.0;
  const DynamicsSpec spec(Variant::AlphaDirected, b, NetworkObjective::zero(5, 1), alpha);
  Eigen::Matrix2d block;
  block << -alpha, -1, 1, 0;
  const Eigen::MatrixXd m = Eigen::kroneckerProduct(block, oracle::laplacian_loops(oracle::example_adjacency()));
  Eigen::VectorXd state0(10);
  state0 << 1, 2, 0.3, 1, 1, 1, 1, 1, 1, 1;
  const double t = 2.0;
  const Eigen::VectorXd exact = (m * t).exp() * state0;
  auto endpoint_error = [&](double dt) {
    const SimState s0{0.0, state0.head(5), state0.tail(5)};
    const Trajectory traj = integrate(spec, s0, {IntegratorMethod::RK4, dt, t, 1000000, true});
    Eigen::VectorXd end(10);
    end << traj.final().state.x, traj.final().state.z;
    return (end - exact).norm();
  };
  const double ratio = endpoint_error(0.04) / endpoint_error(0.02);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Helpers, BlockReductions) {
  Eigen::VectorXd x(6);
  x << 1, 10, 2, 20, 3, 30;
  EXPECT_TRUE(block_mean(x, 3, 2).isApprox(Eigen::Vector2d(2, 20)));
  EXPECT_TRUE(block_sum(x, 3, 2).isApprox(Eigen::Vector2d(6, 60)));
  EXPECT_NEAR(agreement_distance(x, 3, 2), oracle::agreement_distance(x, 3, 2), 1e-14);
}
