#include "dgopt/sim.hpp"

#include "dgopt/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dgopt {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::NonConvergent: return "non_convergent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

RunAssessment assess(const Trajectory& traj, int n, int d, const ConvergenceCriteria& criteria) {
  RunAssessment out;
  if (traj.samples.empty()) return out;
  const auto& samples = traj.samples;
  const double t0 = samples.front().state.t;
  const double t_end = samples.back().state.t;
  const double horizon = t_end - t0;
  out.final_lx_norm = samples.back().lx_norm;
  out.final_rhs_norm = samples.back().rhs_norm;

  // Earliest start of a stretch reaching t_end on which both tolerances hold.
  std::optional<double> start;
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
    if (it->lx_norm <= criteria.agree_tol && it->rhs_norm <= criteria.rate_tol)
      start = it->state.t;
    else
      break;
  }
  if (start && t_end - *start >= criteria.sustain_fraction * horizon) {
    out.verdict = Verdict::Converged;
    out.t_detect = start;
  }

  const double tail_begin = t_end - criteria.tail_fraction * horizon;
  double tail_min = std::numeric_limits<double>::infinity();
  for (const auto& s : samples)
    if (s.state.t >= tail_begin) tail_min = std::min(tail_min, agreement_distance(s.state.x, n, d));
  out.tail_min_agreement_distance = tail_min;
  if (out.verdict != Verdict::Converged && tail_min > criteria.nonconvergence_dist)
    out.verdict = Verdict::NonConvergent;
  return out;
}

SaddleCertificate certify_saddle_point(const LaplacianBundle& bundle, const NetworkObjective& objective,
                                       const Eigen::VectorXd& x, const Eigen::VectorXd& z, double tol) {
  if (x.size() != bundle.nd() || z.size() != bundle.nd())
    throw InputError("certificate: state length does not match n*d");
  SaddleCertificate c;
  c.tol = tol;
  c.hypotheses_hold = bundle.balance.balanced && bundle.strongly_connected;
  c.agreement_residual = bundle.apply(x).norm();
  c.stationarity_residual = (bundle.apply(z) + objective.subgradient(x)).norm();
  const Eigen::VectorXd mean = block_mean(x, bundle.n(), bundle.dimension_d);
  c.optimality_residual = objective.sum_subgradient_at(mean).norm();
  return c;
}

namespace {

// Value comparisons place a smooth minimum only to about sqrt(eps) of the
// scale. Bisecting on the sign of the sum subgradient in a small bracket
// around the estimate recovers full precision; the result is kept only if
// it does not raise the objective.
double polish_by_sign(const NetworkObjective& objective, double x, double fx, double radius, double lo,
                      double hi) {
  auto g = [&](double t) { return objective.sum_subgradient_at(Eigen::VectorXd::Constant(1, t))(0); };
  double a = x, b = x;
  for (double r = radius; r <= hi - lo; r *= 4.0) {
    a = std::max(lo, x - r);
    b = std::min(hi, x + r);
    if (g(a) < 0.0 && g(b) > 0.0) break;
  }
  if (!(g(a) < 0.0 && g(b) > 0.0)) return x;
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double gm = g(m);
    if (gm == 0.0) {
      a = b = m;
      break;
    }
    (gm < 0.0 ? a : b) = m;
  }
  const double candidate = 0.5 * (a + b);
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
  return objective.sum_at(Eigen::VectorXd::Constant(1, candidate)) <= fx + slack ? candidate : x;
}

Eigen::VectorXd golden_section(const NetworkObjective& objective, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double t) { return objective.sum_at(Eigen::VectorXd::Constant(1, t)); };
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 500 && b - a > tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // Compare the bracket midpoint with the box ends (minimizer on the boundary).
  double best = 0.5 * (a + b);
  double f_best = f(best);
  for (double t : {lo, hi}) {
    const double ft = f(t);
    if (ft < f_best) {
      best = t;
      f_best = ft;
    }
  }
  return Eigen::VectorXd::Constant(1, polish_by_sign(objective, best, f_best, std::max(tol, 1e-12 * (hi - lo)), lo, hi));
}

Eigen::VectorXd subgradient_descent(const NetworkObjective& objective, const Box& box, double tol) {
  const int d = box.dimension();
  const Eigen::VectorXd width = box.upper - box.lower;
  const double scale = width.norm();
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(box.lower).cwiseMin(box.upper).eval(); };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(0.5 * (box.lower + box.upper));
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < 7; ++s) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x(k) = box.lower(k) + unit(rng) * width(k);
    starts.push_back(x);
  }

  Eigen::VectorXd best = starts.front();
  double f_best = objective.sum_at(best);
  for (const auto& start : starts) {
    Eigen::VectorXd x = start;
    double f_run = objective.sum_at(x);
    Eigen::VectorXd x_run = x;
    for (int k = 0; k < 20000; ++k) {
      const Eigen::VectorXd g = objective.sum_subgradient_at(x);
      const double gn = g.norm();
      if (gn == 0.0) break;
      const double step = 0.1 * scale / std::sqrt(k + 1.0);
      x = project(x - (step / gn) * g);
      const double fx = objective.sum_at(x);
      if (fx < f_run) {
        f_run = fx;
        x_run = x;
      }
      if (step < tol) break;
    }
    if (f_run < f_best) {
      f_best = f_run;
      best = x_run;
    }
  }
  return best;
}

}  // namespace

Eigen::VectorXd centralized_oracle(const NetworkObjective& objective, const Box& box, double tol) {
  if (!box.valid() || box.dimension() != objective.dimension())
    throw InputError("centralized oracle needs a valid box of the objective dimension");
  if (!(tol > 0.0)) throw InputError("oracle tolerance must be positive");
  if (objective.dimension() == 1) return golden_section(objective, box.lower(0), box.upper(0), tol);
  return subgradient_descent(objective, box, tol);
}

Equilibrium equilibrium_from_minimizer(const LaplacianBundle& bundle, const NetworkObjective& objective,
                                       const Eigen::VectorXd& minimizer, const Eigen::VectorXd& z_sum) {
  const int n = bundle.n();
  const int d = bundle.dimension_d;
  Equilibrium eq;
  eq.x = minimizer.replicate(n, 1);
  const Eigen::VectorXd g = objective.subgradient(eq.x);

  Eigen::MatrixXd system(n + 1, n);
  system.topRows(n) = bundle.laplacian;
  system.row(n).setOnes();
  const auto qr = system.colPivHouseholderQr();

  eq.z.resize(n * d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd rhs(n + 1);
    for (int i = 0; i < n; ++i) rhs(i) = -g(i * d + k);
    rhs(n) = z_sum(k);
    const Eigen::VectorXd zeta = qr.solve(rhs);
    for (int i = 0; i < n; ++i) eq.z(i * d + k) = zeta(i);
  }
  return eq;
}

ExperimentResult run_experiment(const DynamicsSpec& spec, const SimState& s0,
                                const IntegratorConfig& cfg, const ExperimentOptions& options) {
  const LaplacianBundle& b = spec.bundle();
  if (!b.strongly_connected)
    throw InputError("the network must be strongly connected for agreement to be reachable");
  if (spec.variant() == Variant::AlphaDirected && !b.balance.balanced)
    throw InputError("alpha_directed dynamics requires a weight-balanced digraph (max imbalance " +
                     std::to_string(b.balance.max_imbalance) + ")");
  if (s0.x.size() != spec.nd() || s0.z.size() != spec.nd())
    throw InputError("initial state must have length n*d = " + std::to_string(spec.nd()));

  const int n = spec.n();
  const int d = spec.d();
  const NetworkObjective& objective = spec.objective();

  ExperimentResult result;
  const Eigen::VectorXd z_sum = block_sum(s0.z, n, d);
  if (objective.all_constant()) {
    // Every agreement point is optimal; the dynamics keeps the x-mean on
    // balanced graphs, so that is the point it converges to.
    const Eigen::VectorXd mean = block_mean(s0.x, n, d);
    result.oracle_value = mean;
    result.equilibrium = equilibrium_from_minimizer(b, objective, mean, z_sum);
  } else if (options.oracle_box) {
    result.oracle_value = centralized_oracle(objective, *options.oracle_box, options.oracle_tol);
    result.equilibrium = equilibrium_from_minimizer(b, objective, *result.oracle_value, z_sum);
  }

  result.trajectory = integrate(spec, s0, cfg, result.equilibrium);
  result.assessment = assess(result.trajectory, n, d, options.criteria);
  result.converged = result.assessment.verdict == Verdict::Converged;

  const SimState& final_state = result.trajectory.final().state;
  result.agreement_value = block_mean(final_state.x, n, d);
  if (result.oracle_value) {
    result.oracle_gap = (result.agreement_value - *result.oracle_value).cwiseAbs().maxCoeff();
    result.objective_gap = objective.sum_at(result.agreement_value) - objective.sum_at(*result.oracle_value);
  }
  result.certificate = certify_saddle_point(b, objective, final_state.x, final_state.z, options.certify_tol);
  return result;
}

namespace {

Eigen::VectorXd default_x0(int n, int d) {
  static constexpr double kPattern[] = {1.0, 2.0, 0.3, 1.0, 1.0};
  Eigen::VectorXd x0(n * d);
  for (int i = 0; i < n; ++i) x0.segment(i * d, d).setConstant(kPattern[i % 5]);
  return x0;
}

RunReport simulate_zero_objective(const std::string& label, DynamicsSpec spec, const SimState& s0,
                                  const CounterexampleOptions& options) {
  RunReport report;
  report.label = label;
  report.variant = spec.variant();
  report.alpha = spec.alpha();
  try {
    const Trajectory traj = integrate(spec, s0, options.integrator);
    report.assessment = assess(traj, spec.n(), spec.d(), options.criteria);
  } catch (const DivergenceError& e) {
    report.assessment.verdict = Verdict::NonConvergent;
    report.assessment.diverged = true;
    report.assessment.divergence_time = e.time();
  }
  return report;
}

}  // namespace

CounterexampleReport counterexample_suite(const WeightedDigraph& graph, const CounterexampleOptions& options) {
  const int n = graph.size();
  const int d = options.x0 ? static_cast<int>(options.x0->size()) / n : 1;
  const LaplacianBundle bundle = build_laplacian(graph, d);

  CounterexampleReport report;
  report.criterion = check_necessary_condition(bundle);

  Eigen::EigenSolver<Eigen::MatrixXd> es(saddle_linear_matrix(bundle), /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw EigenSolverError("eigensolver did not converge on the lifted linear matrix");
  report.linear_eigvals = es.eigenvalues();
  report.max_linear_real_part = report.linear_eigvals.real().maxCoeff();

  // Predicted spectrum: μ·λ for μ = −½ ± (√3/2)i and λ in spec(L), each d times.
  const std::complex<double> mu(-0.5, std::sqrt(3.0) / 2.0);
  std::vector<std::complex<double>> predicted;
  for (const auto& lambda : bundle.eigvals)
    for (int rep = 0; rep < d; ++rep) {
      predicted.push_back(mu * lambda);
      predicted.push_back(std::conj(mu) * lambda);
    }
  std::vector<bool> used(static_cast<std::size_t>(report.linear_eigvals.size()), false);
  for (const auto& p : predicted) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_k = -1;
    for (Eigen::Index k = 0; k < report.linear_eigvals.size(); ++k) {
      if (used[k]) continue;
      const double err = std::abs(report.linear_eigvals(k) - p);
      if (err < best) {
        best = err;
        best_k = k;
      }
    }
    if (best_k >= 0) used[best_k] = true;
    report.max_eigen_match_error = std::max(report.max_eigen_match_error, best);
  }

  SimState s0;
  s0.x = options.x0 ? *options.x0 : default_x0(n, d);
  s0.z = options.z0 ? *options.z0 : Eigen::VectorXd::Ones(n * d).eval();
  if (s0.x.size() != n * d || s0.z.size() != n * d)
    throw InputError("counterexample initial state must have length n*d");

  const NetworkObjective zero = NetworkObjective::zero(n, d);
  report.runs.push_back(simulate_zero_objective(
      "saddle_point", DynamicsSpec(Variant::SaddlePoint, bundle, zero), s0, options));
  report.runs.push_back(simulate_zero_objective(
      "alpha_directed", DynamicsSpec(Variant::AlphaDirected, bundle, zero, options.alpha), s0, options));
  const LaplacianBundle sym_bundle = build_laplacian(graph.symmetrized(), d);
  report.runs.push_back(simulate_zero_objective(
      "saddle_point_symmetrized", DynamicsSpec(Variant::SaddlePoint, sym_bundle, zero), s0, options));
  return report;
}

namespace scenarios {

WeightedDigraph example_graph() {
  Eigen::MatrixXd a(5, 5);
  a << 0, 0.5326, 0.1654, 0.0004, 0.0002,
       0.0595, 0, 0.6676, 0.0681, 0.1230,
       0.0213, 0.0004, 0, 0.5809, 0.3181,
       0.0248, 0.2458, 0, 0, 0.5587,
       0.5930, 0.1394, 0.0877, 0.1799, 0;
  return WeightedDigraph(a);
}

NetworkObjective figure_objectives(const std::optional<Box>& box) {
  std::vector<ObjectiveFunction> parts;
  parts.push_back(make_objective(parse_expression("exp(x)"), std::nullopt, box));
  parts.push_back(make_objective(parse_expression("(x-3)^2")));
  parts.push_back(make_objective(parse_expression("(x+3)^2")));
  parts.push_back(make_objective(parse_expression("x^4"), std::nullopt, box));
  parts.push_back(make_objective(parse_expression("4")));
  return NetworkObjective(std::move(parts));
}

SimState figure_initial_state() {
  SimState s;
  s.x = (Eigen::VectorXd(5) << 1.0, 2.0, 0.3, 1.0, 1.0).finished();
  s.z = Eigen::VectorXd::Ones(5);
  return s;
}

Equilibrium figure_reported_equilibrium() {
  Equilibrium eq;
  eq.x = Eigen::VectorXd::Constant(5, -0.2005);
  eq.z = (Eigen::VectorXd(5) << 1.1784, 4.3717, -4.1598, 2.2598, 1.3499).finished();
  return eq;
}

}  // namespace scenarios

}  // namespace dgopt
