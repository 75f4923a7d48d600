#ifndef DGOPT_ANALYSIS_HPP
#define DGOPT_ANALYSIS_HPP

#include "dgopt/graph.hpp"

#include <complex>
#include <optional>
#include <utility>

namespace dgopt {

/// Outcome of the spectral test Re(λ) >= √3·|Im(λ)| over the nonzero
/// Laplacian eigenvalues, which the saddle-point dynamics needs in order to
/// converge when the objectives contribute nothing to the linearization.
struct CriterionVerdict {
  bool passes = true;
  /// min over nonzero λ of Re(λ) - √3·|Im(λ)|; +inf when there is none.
  double worst_margin = 0.0;
  /// Eigenvalue attaining worst_margin (positive imaginary part of a pair).
  std::optional<std::complex<double>> witness;
};

/// Margin of a single eigenvalue.
inline double criterion_margin(std::complex<double> lambda) {
  return lambda.real() - std::sqrt(3.0) * std::abs(lambda.imag());
}

CriterionVerdict check_necessary_condition(const LaplacianBundle& bundle, double tol = 0.0);

/// Design function
///   h(r) = ½·Λ*·(−X + √(X² − 4)) + K·r²/(1 + r²),  X = (r⁴ + 3r² + 2)/r.
/// The difference −X + √(X² − 4) is evaluated as −4/(X + √(X² − 4)) to avoid
/// cancellation for large X. Throws DomainError if r <= 0 or X² < 4.
double h_function(double r, double lambda_star_sym, double lipschitz_k);

/// α = (β² + 2)/β.
inline double alpha_from_beta(double beta) { return (beta * beta + 2.0) / beta; }

/// Both real roots of β² − αβ + 2 = 0 (smaller first); empty if α < 2√2.
std::optional<std::pair<double, double>> beta_from_alpha(double alpha);

struct ParameterSelection {
  double lipschitz_k = 0.0;
  double lambda_star_sym = 0.0;
  double beta_star = 0.0;   // smallest positive root of h
  double beta = 0.0;        // safety * beta_star
  double alpha = 0.0;       // (β² + 2)/β
  double h_at_beta = 0.0;   // < 0
  double h_at_beta_star = 0.0;
  bool capped = false;      // no sign change found below kBetaCap
  int bisection_iterations = 0;
};

inline constexpr double kDefaultSafety = 0.9;
inline constexpr double kRootTol = 1e-10;
inline constexpr int kMaxBisection = 200;
inline constexpr double kBetaCap = 1e12;

/// Smallest positive root of h by a geometric upward scan from a point where
/// h < 0 followed by bisection to |h| <= kRootTol (or kMaxBisection steps).
/// If h stays negative up to kBetaCap, returns kBetaCap with capped = true.
ParameterSelection select_parameters(double lambda_star_sym, double lipschitz_k,
                                     double safety = kDefaultSafety);

/// Same, reading Λ* from a bundle; throws InputError unless the bundle is
/// weight-balanced and strongly connected and K > 0.
ParameterSelection select_parameters(const LaplacianBundle& bundle, double lipschitz_k,
                                     double safety = kDefaultSafety);

/// True when some root β of β² − αβ + 2 = 0 lies in (0, β*) of the selection,
/// i.e. α is covered by the sufficient condition for the given Λ* and K.
bool alpha_admissible(double alpha, const ParameterSelection& selection);

/// [[−1, −1], [1, 0]] ⊗ (L ⊗ I_d): the saddle-point dynamics with zero
/// objectives, acting on the stacked state (x, z).
Eigen::MatrixXd saddle_linear_matrix(const LaplacianBundle& bundle);

/// [[−α, −1], [1, 0]] ⊗ (L ⊗ I_d): the α-dynamics with zero objectives.
Eigen::MatrixXd alpha_linear_matrix(const LaplacianBundle& bundle, double alpha);

}  // namespace dgopt

#endif  // DGOPT_ANALYSIS_HPP
