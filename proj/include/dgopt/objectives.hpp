#ifndef DGOPT_OBJECTIVES_HPP
#define DGOPT_OBJECTIVES_HPP

#include "dgopt/expression.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dgopt {

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box interval(double lo, double hi) {
    return {Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)};
  }
  static Box cube(int d, double lo, double hi) {
    return {Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi)};
  }
  int dimension() const { return static_cast<int>(lower.size()); }
  bool valid() const {
    return lower.size() == upper.size() && lower.size() > 0 && (lower.array() <= upper.array()).all();
  }
};

/// Where a gradient Lipschitz constant came from.
enum class LipschitzSource { None, Hint, Analytic, BoxEstimate };

const char* to_string(LipschitzSource s);

/// Convex function f: R^d -> R with a subgradient oracle. At kinks the
/// oracle returns the least-norm element of the generalized gradient.
class ObjectiveFunction {
 public:
  using Eval = std::function<double(const Eigen::VectorXd&)>;
  using Subgradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  ObjectiveFunction(int dimension, Eval eval, Subgradient subgradient, bool smooth,
                    std::optional<double> lipschitz_k, std::string description);

  int dimension() const { return dimension_; }
  double operator()(const Eigen::VectorXd& x) const { return eval_(x); }
  Eigen::VectorXd subgradient(const Eigen::VectorXd& x) const { return subgradient_(x); }
  bool smooth() const { return smooth_; }
  /// True when the gradient is identically zero.
  bool constant() const { return constant_; }
  const std::optional<double>& lipschitz_k() const { return lipschitz_k_; }
  LipschitzSource lipschitz_source() const { return lipschitz_source_; }
  const std::string& description() const { return description_; }
  const std::optional<Expression>& expression() const { return expression_; }

  /// K or InputError explaining that neither a hint nor a box was supplied.
  double require_lipschitz() const;

  ObjectiveFunction with_lipschitz(double k, LipschitzSource source) const;

 private:
  friend ObjectiveFunction make_objective(const Expression&, std::optional<double>,
                                          const std::optional<Box>&);
  friend ObjectiveFunction constant_objective(int, double);

  int dimension_;
  Eval eval_;
  Subgradient subgradient_;
  bool smooth_;
  bool constant_ = false;
  std::optional<double> lipschitz_k_;
  LipschitzSource lipschitz_source_ = LipschitzSource::None;
  std::string description_;
  std::optional<Expression> expression_;
};

/// Objective from an expression in x[0..d-1], d = max index + 1.
/// K comes from the hint if present; otherwise it is exact when the Hessian
/// is constant; otherwise it is the largest Hessian spectral norm on a grid
/// over the box; otherwise it stays unset. Nonsmooth expressions never get
/// an estimated K.
ObjectiveFunction make_objective(const Expression& e, std::optional<double> k_hint = std::nullopt,
                                 const std::optional<Box>& box = std::nullopt);

ObjectiveFunction constant_objective(int d, double c);

/// ½xᵀQx + bᵀx + c with symmetric positive semidefinite Q; K = ‖Q‖₂.
ObjectiveFunction quadratic_form(const Eigen::MatrixXd& q, const Eigen::VectorXd& b, double c = 0.0);

/// Σ_k f_k(x[k]) for scalar parts f_k. K is the largest part constant.
ObjectiveFunction separable(const std::vector<ObjectiveFunction>& scalar_parts);

/// Scalar builtins used by experiment configs.
namespace builtin {
ObjectiveFunction quadratic(double k, double center);  // k(x − c)²
ObjectiveFunction absolute(double center);             // |x − c|
ObjectiveFunction power(int m, const std::optional<Box>& box = std::nullopt);  // x^(2m)
ObjectiveFunction constant(double c);
ObjectiveFunction exponential(double a, const std::optional<Box>& box = std::nullopt);  // e^(ax)
}  // namespace builtin

/// Largest spectral norm of the central-difference Hessian of the
/// subgradient over a grid of `points_per_axis` per coordinate.
double estimate_lipschitz_fd(const ObjectiveFunction& f, const Box& box, int points_per_axis = 201,
                             double step = 1e-5);

/// Stacked objective f̃(x) = Σ_i f^i(x^i) over n agents in R^d.
class NetworkObjective {
 public:
  explicit NetworkObjective(std::vector<ObjectiveFunction> parts);

  /// n copies of the zero function on R^d.
  static NetworkObjective zero(int n, int d);

  int agents() const { return static_cast<int>(parts_.size()); }
  int dimension() const { return dimension_; }
  const std::vector<ObjectiveFunction>& parts() const { return parts_; }
  const ObjectiveFunction& part(int i) const { return parts_[i]; }

  double operator()(const Eigen::VectorXd& stacked) const;
  /// Block i is the subgradient of f^i at x^i.
  Eigen::VectorXd subgradient(const Eigen::VectorXd& stacked) const;

  /// f(x) = Σ_i f^i(x) at a common point.
  double sum_at(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sum_subgradient_at(const Eigen::VectorXd& x) const;

  bool smooth() const;
  bool all_constant() const;
  /// max_i K_i, or nullopt if some agent has no constant.
  std::optional<double> lipschitz_k() const;

 private:
  std::vector<ObjectiveFunction> parts_;
  int dimension_;
};

struct ConvexityReport {
  int samples = 0;
  int violations = 0;
  /// Largest value of g·(x' − x) − (f(x') − f(x)); positive means a violation.
  double worst_violation = 0.0;
  Eigen::VectorXd worst_x;
  Eigen::VectorXd worst_x_prime;
};

/// Samples pairs uniformly in the box and checks the first-order convexity
/// inequality f(x') − f(x) >= gᵀ(x' − x) with slack 1e-9.
ConvexityReport check_convexity(const ObjectiveFunction& f, int samples, const Box& box,
                                std::uint64_t seed);

struct CocoercivityReport {
  int samples = 0;
  int violations = 0;
  /// min over pairs of (x − x')ᵀ(g − g') − (1/K)‖g − g'‖², relative to the first term.
  double min_relative_slack = 0.0;
  /// max over pairs of the relative slack, 0 when the inequality is tight everywhere.
  double max_relative_slack = 0.0;
};

/// Sampled check of (x − x')ᵀ(g_x − g_x') >= (1/K)‖g_x − g_x'‖².
CocoercivityReport check_cocoercivity(const ObjectiveFunction& f, double k, int samples,
                                      const Box& box, std::uint64_t seed);

}  // namespace dgopt

#endif  // DGOPT_OBJECTIVES_HPP
