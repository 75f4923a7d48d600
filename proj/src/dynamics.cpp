#include "dgopt/dynamics.hpp"

#include "dgopt/analysis.hpp"
#include "dgopt/errors.hpp"

#include <Eigen/SVD>

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace dgopt {

const char* to_string(Variant v) {
  return v == Variant::SaddlePoint ? "saddle_point" : "alpha_directed";
}

Variant variant_from_string(const std::string& s) {
  if (s == "saddle_point") return Variant::SaddlePoint;
  if (s == "alpha_directed") return Variant::AlphaDirected;
  throw InputError("unknown dynamics variant '" + s + "' (expected saddle_point or alpha_directed)");
}

const char* to_string(IntegratorMethod m) {
  switch (m) {
    case IntegratorMethod::Auto: return "auto";
    case IntegratorMethod::Euler: return "euler";
    case IntegratorMethod::RK4: return "rk4";
  }
  return "auto";
}

DynamicsSpec::DynamicsSpec(Variant variant, LaplacianBundle bundle, NetworkObjective objective,
                           double alpha, std::optional<double> beta)
    : variant_(variant),
      alpha_(alpha),
      beta_(beta),
      bundle_(std::move(bundle)),
      objective_(std::move(objective)),
      laplacian_norm2_(0.0) {
  if (objective_.agents() != bundle_.n())
    throw InputError("graph has " + std::to_string(bundle_.n()) + " agents but " +
                     std::to_string(objective_.agents()) + " objectives were given");
  if (objective_.dimension() != bundle_.dimension_d)
    throw InputError("objective dimension does not match the lifted Laplacian");
  if (variant_ == Variant::AlphaDirected) {
    if (!(alpha_ > 0.0)) throw InputError("alpha_directed dynamics requires alpha > 0");
    if (!objective_.smooth())
      throw InputError("alpha_directed dynamics requires differentiable objectives");
  }
  if (beta_) {
    if (!(*beta_ > 0.0)) throw InputError("beta must be positive");
    const double a = this->alpha();
    const double residual = *beta_ * *beta_ - a * *beta_ + 2.0;
    if (std::abs(residual) > 1e-10 * std::max(1.0, a * *beta_))
      throw InputError("beta must satisfy beta^2 - alpha*beta + 2 = 0");
  }
  laplacian_norm2_ = Eigen::JacobiSVD<Eigen::MatrixXd>(bundle_.laplacian).singularValues()(0);
}

DynamicsSpec DynamicsSpec::alpha_directed(LaplacianBundle bundle, NetworkObjective objective,
                                          double alpha) {
  const auto roots = beta_from_alpha(alpha);
  if (!roots) throw InputError("a companion beta exists only for alpha >= 2*sqrt(2)");
  return DynamicsSpec(Variant::AlphaDirected, std::move(bundle), std::move(objective), alpha,
                      roots->first);
}

double DynamicsSpec::dt_max() const {
  const double k = objective_.lipschitz_k().value_or(0.0);
  const double denom = alpha() * laplacian_norm2_ + k + laplacian_norm2_;
  return denom > 0.0 ? 0.5 / denom : std::numeric_limits<double>::infinity();
}

std::uint64_t DynamicsSpec::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_bytes = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  auto mix_double = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    mix_bytes(&bits, sizeof bits);
  };
  const int v = static_cast<int>(variant_);
  mix_bytes(&v, sizeof v);
  mix_double(alpha());
  mix_double(beta_.value_or(0.0));
  mix_bytes(&bundle_.dimension_d, sizeof bundle_.dimension_d);
  for (Eigen::Index i = 0; i < bundle_.laplacian.size(); ++i) mix_double(bundle_.laplacian(i));
  for (const auto& p : objective_.parts()) mix_bytes(p.description().data(), p.description().size());
  return h;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> rhs(const DynamicsSpec& spec, const SimState& s) {
  const LaplacianBundle& b = spec.bundle();
  const Eigen::VectorXd lx = b.apply(s.x);
  const Eigen::VectorXd lz = b.apply(s.z);
  const Eigen::VectorXd g = spec.objective().subgradient(s.x);
  if (!g.allFinite()) {
    std::ostringstream os;
    os << "objective gradient is not finite at t = " << s.t;
    throw DivergenceError(os.str(), s.t);
  }
  Eigen::VectorXd dx = -spec.alpha() * lx - lz - g;
  return {std::move(dx), lx};
}

double saddle_function(const DynamicsSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z) {
  if (!spec.bundle().balance.balanced)
    throw InputError("the saddle function is defined for weight-balanced digraphs");
  const LaplacianBundle& b = spec.bundle();
  return spec.objective()(x) + x.dot(b.apply(z)) + 0.5 * x.dot(b.apply(x));
}

double lyapunov_value(const DynamicsSpec& spec, const SimState& s, const Equilibrium& eq) {
  const Eigen::VectorXd ex = s.x - eq.x;
  if (spec.variant() == Variant::SaddlePoint)
    return 0.5 * ex.squaredNorm() + 0.5 * (s.z - eq.z).squaredNorm();
  if (!spec.beta()) throw InputError("the alpha_directed Lyapunov function needs beta");
  const double beta = *spec.beta();
  const Eigen::VectorXd ey = beta * ex + (s.z - eq.z);
  return 0.5 * ex.squaredNorm() + 0.5 * ey.squaredNorm();
}

Eigen::VectorXd block_sum(const Eigen::VectorXd& z, int n, int d) {
  return Eigen::Map<const Eigen::MatrixXd>(z.data(), d, n).rowwise().sum();
}

Eigen::VectorXd block_mean(const Eigen::VectorXd& x, int n, int d) {
  return block_sum(x, n, d) / static_cast<double>(n);
}

double agreement_distance(const Eigen::VectorXd& x, int n, int d) {
  const Eigen::Map<const Eigen::MatrixXd> blocks(x.data(), d, n);
  const Eigen::VectorXd mean = blocks.rowwise().mean();
  return (blocks.colwise() - mean).norm();
}

namespace {

struct Derivative {
  Eigen::VectorXd dx;
  Eigen::VectorXd dz;
};

Derivative eval_rhs(const DynamicsSpec& spec, double t, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z) {
  auto [dx, dz] = rhs(spec, SimState{t, x, z});
  return {std::move(dx), std::move(dz)};
}

}  // namespace

Trajectory integrate(const DynamicsSpec& spec, const SimState& s0, const IntegratorConfig& cfg,
                     const std::optional<Equilibrium>& eq) {
  const int n = spec.n();
  const int d = spec.d();
  if (s0.x.size() != spec.nd() || s0.z.size() != spec.nd())
    throw InputError("initial state must have length n*d = " + std::to_string(spec.nd()));
  if (!s0.x.allFinite() || !s0.z.allFinite()) throw InputError("initial state must be finite");
  if (!(cfg.dt > 0.0)) throw InputError("dt must be positive");
  if (!(cfg.t_final > 0.0)) throw InputError("t_final must be positive");
  if (cfg.record_every < 1) throw InputError("record_every must be a positive integer");
  if (cfg.enforce_dt_max && cfg.dt > spec.dt_max()) {
    std::ostringstream os;
    os << "dt = " << cfg.dt << " exceeds the stability bound dt_max = " << spec.dt_max();
    throw InputError(os.str());
  }

  IntegratorMethod method = cfg.method;
  const bool smooth = spec.objective().smooth();
  if (method == IntegratorMethod::Auto) method = smooth ? IntegratorMethod::RK4 : IntegratorMethod::Euler;
  if (method == IntegratorMethod::RK4 && !smooth)
    throw InputError("rk4 is not meaningful on a nonsmooth objective; use euler");

  const std::int64_t steps = std::max<std::int64_t>(1, std::llround(cfg.t_final / cfg.dt));
  const double dt = cfg.dt;

  Trajectory traj;
  traj.meta.integrator = method;
  traj.meta.dt = dt;
  traj.meta.steps = steps;
  traj.meta.spec_hash = spec.hash();
  traj.samples.reserve(static_cast<std::size_t>(steps / cfg.record_every + 2));

  Eigen::VectorXd x = s0.x;
  Eigen::VectorXd z = s0.z;
  const Eigen::VectorXd z_sum0 = block_sum(z, n, d);
  Eigen::VectorXd z_sum_prev = z_sum0;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool track_v = eq && (spec.variant() == Variant::SaddlePoint || spec.beta());
  auto value_of = [&](double t) {
    return track_v ? lyapunov_value(spec, SimState{t, x, z}, *eq) : nan;
  };

  auto record = [&](double t, const Derivative& k) {
    TrajectorySample sample;
    sample.state = SimState{t, x, z};
    sample.v = value_of(t);
    sample.lx_norm = k.dz.norm();  // ż = 𝐋x
    sample.rhs_norm = std::sqrt(k.dx.squaredNorm() + k.dz.squaredNorm());
    traj.samples.push_back(std::move(sample));
  };

  Derivative k1 = eval_rhs(spec, s0.t, x, z);
  record(s0.t, k1);
  double v_prev = value_of(s0.t);

  for (std::int64_t step = 1; step <= steps; ++step) {
    const double t_prev = s0.t + static_cast<double>(step - 1) * dt;
    const double t = s0.t + static_cast<double>(step) * dt;

    if (method == IntegratorMethod::Euler) {
      x += dt * k1.dx;
      z += dt * k1.dz;
    } else {
      const double h2 = 0.5 * dt;
      const Derivative k2 = eval_rhs(spec, t_prev + h2, x + h2 * k1.dx, z + h2 * k1.dz);
      const Derivative k3 = eval_rhs(spec, t_prev + h2, x + h2 * k2.dx, z + h2 * k2.dz);
      const Derivative k4 = eval_rhs(spec, t, x + dt * k3.dx, z + dt * k3.dz);
      x += (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      z += (dt / 6.0) * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
    }

    if (!x.allFinite() || !z.allFinite()) {
      std::ostringstream os;
      os << "state became non-finite at t = " << t;
      throw DivergenceError(os.str(), t);
    }

    const Eigen::VectorXd z_sum = block_sum(z, n, d);
    traj.meta.max_z_sum_drift =
        std::max(traj.meta.max_z_sum_drift, (z_sum - z_sum0).cwiseAbs().maxCoeff());
    traj.meta.max_step_z_sum_drift =
        std::max(traj.meta.max_step_z_sum_drift, (z_sum - z_sum_prev).cwiseAbs().maxCoeff());
    z_sum_prev = z_sum;

    if (track_v) {
      const double v = value_of(t);
      const double excess = v - v_prev - kLyapunovSlack * (1.0 + v_prev);
      if (excess > 0.0) {
        ++traj.meta.lyapunov_violations;
        traj.meta.max_lyapunov_excess = std::max(traj.meta.max_lyapunov_excess, excess);
      }
      v_prev = v;
    }

    k1 = eval_rhs(spec, t, x, z);
    if (step % cfg.record_every == 0 || step == steps) record(t, k1);
  }
  return traj;
}

}  // namespace dgopt
