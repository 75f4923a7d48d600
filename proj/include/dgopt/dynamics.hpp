#ifndef DGOPT_DYNAMICS_HPP
#define DGOPT_DYNAMICS_HPP

#include "dgopt/graph.hpp"
#include "dgopt/objectives.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dgopt {

enum class Variant {
  SaddlePoint,    // ẋ ∈ −𝐋x − 𝐋z − ∂f̃(x),  ż = 𝐋x
  AlphaDirected,  // ẋ = −α𝐋x − 𝐋z − ∇f̃(x), ż = 𝐋x
};

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Point (t, x, z) of a trajectory; x and z stack the n agent blocks in R^d.
struct SimState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd z;
};

struct Equilibrium {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
};

/// Which dynamics to run on which network.
class DynamicsSpec {
 public:
  /// Throws InputError if dimensions disagree, if the α-dynamics gets α <= 0
  /// or a nonsmooth objective, or if β does not solve β² − αβ + 2 = 0.
  DynamicsSpec(Variant variant, LaplacianBundle bundle, NetworkObjective objective,
               double alpha = 1.0, std::optional<double> beta = std::nullopt);

  /// α-dynamics with β set to the smaller root of β² − αβ + 2 = 0.
  /// Requires α >= 2√2.
  static DynamicsSpec alpha_directed(LaplacianBundle bundle, NetworkObjective objective,
                                     double alpha);

  Variant variant() const { return variant_; }
  /// Gain on 𝐋x in the x equation; 1 for the saddle-point dynamics.
  double alpha() const { return variant_ == Variant::AlphaDirected ? alpha_ : 1.0; }
  const std::optional<double>& beta() const { return beta_; }
  const LaplacianBundle& bundle() const { return bundle_; }
  const NetworkObjective& objective() const { return objective_; }
  int n() const { return bundle_.n(); }
  int d() const { return bundle_.dimension_d; }
  int nd() const { return bundle_.nd(); }

  /// Largest stable fixed step: 0.5/(α‖L‖₂ + K + ‖L‖₂) with K = 0 when the
  /// objective has no Lipschitz constant.
  double dt_max() const;

  /// FNV-1a hash of the variant, parameters, Laplacian and objectives.
  std::uint64_t hash() const;

 private:
  Variant variant_;
  double alpha_;
  std::optional<double> beta_;
  LaplacianBundle bundle_;
  NetworkObjective objective_;
  double laplacian_norm2_;
};

/// Right-hand side (ẋ, ż) using the least-norm subgradient selection.
/// Throws DivergenceError if the objective gradient is not finite.
std::pair<Eigen::VectorXd, Eigen::VectorXd> rhs(const DynamicsSpec& spec, const SimState& s);

/// F(x, z) = f̃(x) + xᵀ𝐋z + ½xᵀ𝐋x. Throws InputError on a graph that is not
/// weight-balanced.
double saddle_function(const DynamicsSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z);

/// Saddle-point dynamics: ½‖x − x*‖² + ½‖z − z*‖².
/// α-dynamics: ½‖x − x*‖² + ½‖(βx + z) − (βx* + z*)‖².
double lyapunov_value(const DynamicsSpec& spec, const SimState& s, const Equilibrium& eq);

/// ‖x − 1_n ⊗ mean(x)‖, the distance to the agreement subspace.
double agreement_distance(const Eigen::VectorXd& x, int n, int d);

/// Blockwise mean (1/n)Σ_i x^i.
Eigen::VectorXd block_mean(const Eigen::VectorXd& x, int n, int d);

/// Σ_i z^i, conserved on weight-balanced graphs.
Eigen::VectorXd block_sum(const Eigen::VectorXd& z, int n, int d);

enum class IntegratorMethod { Auto, Euler, RK4 };

const char* to_string(IntegratorMethod m);

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::Auto;  // RK4 if smooth, else Euler
  double dt = 1e-3;
  double t_final = 40.0;
  int record_every = 1;
  bool enforce_dt_max = true;
};

struct TrajectorySample {
  SimState state;
  double v = 0.0;          // NaN when no equilibrium was given
  double lx_norm = 0.0;    // ‖𝐋x‖
  double rhs_norm = 0.0;   // ‖(ẋ, ż)‖
};

struct TrajectoryMeta {
  IntegratorMethod integrator = IntegratorMethod::Euler;
  double dt = 0.0;
  std::int64_t steps = 0;
  std::uint64_t spec_hash = 0;
  /// Largest |Σ_i z^i(t) − Σ_i z^i(0)| over all steps, and over one step.
  double max_z_sum_drift = 0.0;
  double max_step_z_sum_drift = 0.0;
  /// Steps where V rose by more than 1e-8·(1 + V); only with an equilibrium.
  std::int64_t lyapunov_violations = 0;
  double max_lyapunov_excess = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  TrajectoryMeta meta;

  const TrajectorySample& final() const { return samples.back(); }
};

/// Per-step Lyapunov slack: V(t + dt) <= V(t) + kLyapunovSlack·(1 + V(t)).
inline constexpr double kLyapunovSlack = 1e-8;

/// Fixed-step integration with samples at steps 0, record_every, 2·record_every,
/// ... and at the final step. Throws InputError for dt outside (0, dt_max]
/// (when enforced) or RK4 on a nonsmooth objective; DivergenceError with the
/// first bad time if the state becomes non-finite.
Trajectory integrate(const DynamicsSpec& spec, const SimState& s0, const IntegratorConfig& cfg,
                     const std::optional<Equilibrium>& eq = std::nullopt);

}  // namespace dgopt

#endif  // DGOPT_DYNAMICS_HPP
