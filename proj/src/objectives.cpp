#include "dgopt/objectives.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

namespace dgopt {

const char* to_string(LipschitzSource s) {
  switch (s) {
    case LipschitzSource::None: return "none";
    case LipschitzSource::Hint: return "hint";
    case LipschitzSource::Analytic: return "analytic";
    case LipschitzSource::BoxEstimate: return "box-estimate";
  }
  return "none";
}

ObjectiveFunction::ObjectiveFunction(int dimension, Eval eval, Subgradient subgradient, bool smooth,
                                     std::optional<double> lipschitz_k, std::string description)
    : dimension_(dimension),
      eval_(std::move(eval)),
      subgradient_(std::move(subgradient)),
      smooth_(smooth),
      lipschitz_k_(lipschitz_k),
      lipschitz_source_(lipschitz_k ? LipschitzSource::Hint : LipschitzSource::None),
      description_(std::move(description)) {
  if (dimension_ < 1) throw InputError("objective dimension must be positive");
  if (lipschitz_k_ && !(*lipschitz_k_ >= 0.0))
    throw InputError("gradient Lipschitz constant must be nonnegative");
}

double ObjectiveFunction::require_lipschitz() const {
  if (!lipschitz_k_)
    throw InputError("objective '" + description_ +
                     "' has no gradient Lipschitz constant; supply a K hint or a domain box");
  return *lipschitz_k_;
}

ObjectiveFunction ObjectiveFunction::with_lipschitz(double k, LipschitzSource source) const {
  if (!(k >= 0.0)) throw InputError("gradient Lipschitz constant must be nonnegative");
  ObjectiveFunction out = *this;
  out.lipschitz_k_ = k;
  out.lipschitz_source_ = source;
  return out;
}

namespace {

double spectral_norm_symmetric(const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Calls visit(point) on a tensor grid over the box, endpoints included.
template <typename Visit>
void for_each_grid_point(const Box& box, int points_per_axis, Visit&& visit) {
  const int d = box.dimension();
  // Keep the total grid size bounded in higher dimension.
  constexpr double kMaxPoints = 50000.0;
  int per_axis = points_per_axis;
  if (std::pow(per_axis, d) > kMaxPoints)
    per_axis = std::max(2, static_cast<int>(std::floor(std::pow(kMaxPoints, 1.0 / d))));
  std::vector<int> idx(d, 0);
  Eigen::VectorXd x(d);
  for (;;) {
    for (int k = 0; k < d; ++k) {
      const double t = per_axis == 1 ? 0.0 : static_cast<double>(idx[k]) / (per_axis - 1);
      x(k) = box.lower(k) + t * (box.upper(k) - box.lower(k));
    }
    visit(x);
    int k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
}

}  // namespace

ObjectiveFunction make_objective(const Expression& e, std::optional<double> k_hint,
                                 const std::optional<Box>& box) {
  const int d = std::max(1, e.max_variable_index() + 1);
  std::vector<Expression> grad;
  grad.reserve(d);
  for (int k = 0; k < d; ++k) grad.push_back(differentiate(e, k));

  auto eval = [e](const Eigen::VectorXd& x) {
    return e.evaluate(std::span<const double>(x.data(), x.size()));
  };
  auto subgrad = [grad](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(grad.size());
    for (std::size_t k = 0; k < grad.size(); ++k)
      g(k) = grad[k].evaluate(std::span<const double>(x.data(), x.size()));
    return g;
  };

  ObjectiveFunction f(d, eval, subgrad, e.is_smooth(), std::nullopt, e.to_string());
  f.expression_ = e;
  f.constant_ = std::all_of(grad.begin(), grad.end(),
                            [](const Expression& g) { return g.kind() == Expression::Kind::Constant &&
                                                             g.value() == 0.0; });

  if (box && box->dimension() != d)
    throw InputError("domain box has dimension " + std::to_string(box->dimension()) +
                     " but the expression has dimension " + std::to_string(d));

  if (k_hint) {
    if (!(*k_hint > 0.0)) throw InputError("K hint must be positive");
    f.lipschitz_k_ = *k_hint;
    f.lipschitz_source_ = LipschitzSource::Hint;
    return f;
  }
  if (!f.smooth_) return f;

  std::vector<Expression> hessian;
  hessian.reserve(static_cast<std::size_t>(d) * d);
  bool constant_hessian = true;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      hessian.push_back(differentiate(grad[i], j));
      constant_hessian = constant_hessian && hessian.back().kind() == Expression::Kind::Constant;
    }

  auto hessian_at = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd h(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        h(i, j) = hessian[i * d + j].evaluate(std::span<const double>(x.data(), x.size()));
    return h;
  };

  if (constant_hessian) {
    f.lipschitz_k_ = spectral_norm_symmetric(hessian_at(Eigen::VectorXd::Zero(d)));
    f.lipschitz_source_ = LipschitzSource::Analytic;
  } else if (box) {
    double k = 0.0;
    for_each_grid_point(*box, 2001, [&](const Eigen::VectorXd& x) {
      k = std::max(k, spectral_norm_symmetric(hessian_at(x)));
    });
    f.lipschitz_k_ = k;
    f.lipschitz_source_ = LipschitzSource::BoxEstimate;
  }
  return f;
}

ObjectiveFunction constant_objective(int d, double c) {
  ObjectiveFunction f(
      d, [c](const Eigen::VectorXd&) { return c; },
      [d](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d).eval(); }, true, 0.0,
      "constant");
  f.constant_ = true;
  f.lipschitz_source_ = LipschitzSource::Analytic;
  if (d == 1) f.expression_ = Expression::constant(c);
  std::ostringstream os;
  os << c;
  f.description_ = os.str();
  return f;
}

ObjectiveFunction quadratic_form(const Eigen::MatrixXd& q, const Eigen::VectorXd& b, double c) {
  if (q.rows() != q.cols() || q.rows() != b.size())
    throw InputError("quadratic form: Q must be d x d and b of length d");
  const Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, sym.norm()))
    throw InputError("quadratic form: Q must be positive semidefinite");
  const double k = es.eigenvalues().cwiseAbs().maxCoeff();
  ObjectiveFunction f(
      static_cast<int>(b.size()),
      [sym, b, c](const Eigen::VectorXd& x) { return 0.5 * x.dot(sym * x) + b.dot(x) + c; },
      [sym, b](const Eigen::VectorXd& x) { return (sym * x + b).eval(); }, true, k,
      "quadratic-form");
  return f.with_lipschitz(k, LipschitzSource::Analytic);
}

ObjectiveFunction separable(const std::vector<ObjectiveFunction>& scalar_parts) {
  if (scalar_parts.empty()) throw InputError("separable objective needs at least one part");
  bool smooth = true;
  std::optional<double> k = 0.0;
  for (const auto& p : scalar_parts) {
    if (p.dimension() != 1) throw InputError("separable objective parts must be scalar");
    smooth = smooth && p.smooth();
    if (k && p.lipschitz_k())
      k = std::max(*k, *p.lipschitz_k());
    else
      k.reset();
  }
  const int d = static_cast<int>(scalar_parts.size());
  ObjectiveFunction f(
      d,
      [scalar_parts](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < scalar_parts.size(); ++i)
          s += scalar_parts[i](x.segment(static_cast<Eigen::Index>(i), 1));
        return s;
      },
      [scalar_parts](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(x.size());
        for (std::size_t i = 0; i < scalar_parts.size(); ++i)
          g(static_cast<Eigen::Index>(i)) =
              scalar_parts[i].subgradient(x.segment(static_cast<Eigen::Index>(i), 1))(0);
        return g;
      },
      smooth, std::nullopt, "separable");
  if (k) return f.with_lipschitz(*k, LipschitzSource::Analytic);
  return f;
}

namespace builtin {

namespace {
Expression x() { return Expression::variable(0); }
Expression c(double v) { return Expression::constant(v); }
}  // namespace

ObjectiveFunction quadratic(double k, double center) {
  if (!(k >= 0.0)) throw InputError("quadratic builtin needs k >= 0");
  return make_objective(c(k) * Expression::power(x() - c(center), 2));
}

ObjectiveFunction absolute(double center) {
  return make_objective(Expression::unary(Expression::Kind::Abs, x() - c(center)));
}

ObjectiveFunction power(int m, const std::optional<Box>& box) {
  if (m < 1) throw InputError("power builtin needs m >= 1");
  return make_objective(Expression::power(x(), 2 * m), std::nullopt, box);
}

ObjectiveFunction constant(double value) { return constant_objective(1, value); }

ObjectiveFunction exponential(double a, const std::optional<Box>& box) {
  return make_objective(Expression::unary(Expression::Kind::Exp, c(a) * x()), std::nullopt, box);
}

}  // namespace builtin

double estimate_lipschitz_fd(const ObjectiveFunction& f, const Box& box, int points_per_axis,
                             double step) {
  const int d = f.dimension();
  if (box.dimension() != d) throw InputError("box dimension does not match the objective");
  double k = 0.0;
  for_each_grid_point(box, points_per_axis, [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd h(d, d);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += step;
      xm(j) -= step;
      h.col(j) = (f.subgradient(xp) - f.subgradient(xm)) / (2.0 * step);
    }
    k = std::max(k, spectral_norm_symmetric(h));
  });
  return k;
}

// ---------------------------------------------------------------------------

NetworkObjective::NetworkObjective(std::vector<ObjectiveFunction> parts)
    : parts_(std::move(parts)), dimension_(0) {
  if (parts_.empty()) throw InputError("network objective needs at least one agent");
  dimension_ = parts_.front().dimension();
  for (const auto& p : parts_)
    if (p.dimension() != dimension_)
      throw InputError("all agent objectives must share the same dimension");
}

NetworkObjective NetworkObjective::zero(int n, int d) {
  return NetworkObjective(std::vector<ObjectiveFunction>(n, constant_objective(d, 0.0)));
}

double NetworkObjective::operator()(const Eigen::VectorXd& stacked) const {
  double s = 0.0;
  for (int i = 0; i < agents(); ++i)
    s += parts_[i](stacked.segment(static_cast<Eigen::Index>(i) * dimension_, dimension_));
  return s;
}

Eigen::VectorXd NetworkObjective::subgradient(const Eigen::VectorXd& stacked) const {
  Eigen::VectorXd g(stacked.size());
  for (int i = 0; i < agents(); ++i) {
    const Eigen::Index off = static_cast<Eigen::Index>(i) * dimension_;
    g.segment(off, dimension_) = parts_[i].subgradient(stacked.segment(off, dimension_));
  }
  return g;
}

double NetworkObjective::sum_at(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (const auto& p : parts_) s += p(x);
  return s;
}

Eigen::VectorXd NetworkObjective::sum_subgradient_at(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension_);
  for (const auto& p : parts_) g += p.subgradient(x);
  return g;
}

bool NetworkObjective::smooth() const {
  return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.smooth(); });
}

bool NetworkObjective::all_constant() const {
  return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.constant(); });
}

std::optional<double> NetworkObjective::lipschitz_k() const {
  double k = 0.0;
  for (const auto& p : parts_) {
    if (!p.lipschitz_k()) return std::nullopt;
    k = std::max(k, *p.lipschitz_k());
  }
  return k;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd sample_in(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x(box.dimension());
  for (int k = 0; k < box.dimension(); ++k)
    x(k) = box.lower(k) + unit(rng) * (box.upper(k) - box.lower(k));
  return x;
}

}  // namespace

ConvexityReport check_convexity(const ObjectiveFunction& f, int samples, const Box& box,
                                std::uint64_t seed) {
  if (box.dimension() != f.dimension()) throw InputError("box dimension does not match the objective");
  constexpr double kSlack = 1e-9;
  std::mt19937_64 rng(seed);
  ConvexityReport report;
  report.samples = samples;
  report.worst_violation = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = sample_in(box, rng);
    const Eigen::VectorXd xp = sample_in(box, rng);
    const double gap = f.subgradient(x).dot(xp - x) - (f(xp) - f(x));
    if (gap > kSlack) ++report.violations;
    if (gap > report.worst_violation) {
      report.worst_violation = gap;
      report.worst_x = x;
      report.worst_x_prime = xp;
    }
  }
  return report;
}

CocoercivityReport check_cocoercivity(const ObjectiveFunction& f, double k, int samples,
                                      const Box& box, std::uint64_t seed) {
  if (!(k > 0.0)) throw InputError("cocoercivity check needs K > 0");
  if (box.dimension() != f.dimension()) throw InputError("box dimension does not match the objective");
  std::mt19937_64 rng(seed);
  CocoercivityReport report;
  report.samples = samples;
  report.min_relative_slack = std::numeric_limits<double>::infinity();
  report.max_relative_slack = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = sample_in(box, rng);
    const Eigen::VectorXd xp = sample_in(box, rng);
    const Eigen::VectorXd dg = f.subgradient(x) - f.subgradient(xp);
    const double inner = (x - xp).dot(dg);
    const double slack = inner - dg.squaredNorm() / k;
    const double rel = slack / std::max(std::abs(inner), 1e-300);
    if (slack < -1e-12 * std::max(1.0, std::abs(inner))) ++report.violations;
    report.min_relative_slack = std::min(report.min_relative_slack, rel);
    report.max_relative_slack = std::max(report.max_relative_slack, rel);
  }
  return report;
}

}  // namespace dgopt
