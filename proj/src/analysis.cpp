#include "dgopt/analysis.hpp"

#include "dgopt/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dgopt {

CriterionVerdict check_necessary_condition(const LaplacianBundle& bundle, double tol) {
  CriterionVerdict verdict;
  verdict.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& lambda : bundle.eigvals) {
    if (!bundle.is_nonzero_eigenvalue(lambda)) continue;
    const double margin = criterion_margin(lambda);
    // Conjugate pairs tie; report the member with nonnegative imaginary part.
    const bool better = margin < verdict.worst_margin ||
                        (margin == verdict.worst_margin && lambda.imag() > 0.0);
    if (better) {
      verdict.worst_margin = margin;
      verdict.witness = std::complex<double>(lambda.real(), std::abs(lambda.imag()));
    }
  }
  verdict.passes = verdict.worst_margin >= -tol;
  if (verdict.passes) verdict.witness.reset();
  return verdict;
}

double h_function(double r, double lambda_star_sym, double lipschitz_k) {
  if (!(r > 0.0)) throw DomainError("h(r) requires r > 0, got " + std::to_string(r));
  const double r2 = r * r;
  const double x = (r2 + 1.0) * (r2 + 2.0) / r;
  const double disc = x * x - 4.0;
  if (disc < 0.0) throw DomainError("h(r): negative discriminant at r = " + std::to_string(r));
  const double consensus_part = 0.5 * lambda_star_sym * (-4.0 / (x + std::sqrt(disc)));
  return consensus_part + lipschitz_k * r2 / (1.0 + r2);
}

std::optional<std::pair<double, double>> beta_from_alpha(double alpha) {
  const double disc = alpha * alpha - 8.0;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  // Product of the roots is 2; take the stable one and divide.
  const double large = 0.5 * (alpha + s);
  return std::make_pair(2.0 / large, large);
}

ParameterSelection select_parameters(double lambda_star_sym, double lipschitz_k, double safety) {
  if (!(lambda_star_sym > 0.0))
    throw InputError("parameter selection needs a positive Λ* of L + L^T; "
                     "the graph must be weight-balanced and strongly connected");
  if (!(lipschitz_k > 0.0))
    throw InputError("parameter selection needs a gradient Lipschitz constant K > 0; "
                     "for zero objectives any alpha >= 2*sqrt(2) works");
  if (!(safety > 0.0 && safety < 1.0)) throw InputError("safety factor must lie in (0, 1)");

  ParameterSelection sel;
  sel.lipschitz_k = lipschitz_k;
  sel.lambda_star_sym = lambda_star_sym;

  const auto h = [&](double r) { return h_function(r, lambda_star_sym, lipschitz_k); };

  double lo = std::min(1e-6 * lambda_star_sym / lipschitz_k, 1e-6);
  if (!(h(lo) < 0.0))
    throw DomainError("h is not negative near zero; cannot bracket the root");

  // Fine geometric scan so that the first sign change is the smallest root.
  constexpr double kGrowth = 1.05;
  double hi = lo;
  bool bracketed = false;
  while (hi < kBetaCap) {
    const double next = std::min(hi * kGrowth, kBetaCap);
    if (h(next) >= 0.0) {
      lo = hi;
      hi = next;
      bracketed = true;
      break;
    }
    hi = next;
  }

  if (!bracketed) {
    sel.capped = true;
    sel.beta_star = kBetaCap;
    sel.h_at_beta_star = h(kBetaCap);
  } else {
    double mid = hi;
    double h_mid = h(hi);
    for (int it = 0; it < kMaxBisection; ++it) {
      mid = 0.5 * (lo + hi);
      h_mid = h(mid);
      sel.bisection_iterations = it + 1;
      if (std::abs(h_mid) <= kRootTol) break;
      if (h_mid < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    sel.beta_star = mid;
    sel.h_at_beta_star = h_mid;
  }

  sel.beta = safety * sel.beta_star;
  sel.alpha = alpha_from_beta(sel.beta);
  sel.h_at_beta = h(sel.beta);
  if (!(sel.h_at_beta < 0.0))
    throw DomainError("selected beta does not satisfy h(beta) < 0");
  return sel;
}

ParameterSelection select_parameters(const LaplacianBundle& bundle, double lipschitz_k,
                                     double safety) {
  if (!bundle.balance.balanced)
    throw InputError("parameter selection requires a weight-balanced digraph (max imbalance " +
                     std::to_string(bundle.balance.max_imbalance) + ")");
  if (!bundle.strongly_connected)
    throw InputError("parameter selection requires a strongly connected digraph");
  return select_parameters(bundle.lambda_star_sym, lipschitz_k, safety);
}

bool alpha_admissible(double alpha, const ParameterSelection& selection) {
  const auto roots = beta_from_alpha(alpha);
  if (!roots) return false;
  for (double beta : {roots->first, roots->second}) {
    if (beta > 0.0 && beta < selection.beta_star &&
        h_function(beta, selection.lambda_star_sym, selection.lipschitz_k) < 0.0)
      return true;
  }
  return false;
}

namespace {

Eigen::MatrixXd block_linear(const LaplacianBundle& bundle, double a11) {
  const Eigen::Index nd = bundle.nd();
  Eigen::MatrixXd m(2 * nd, 2 * nd);
  m.topLeftCorner(nd, nd) = a11 * bundle.lifted;
  m.topRightCorner(nd, nd) = -bundle.lifted;
  m.bottomLeftCorner(nd, nd) = bundle.lifted;
  m.bottomRightCorner(nd, nd).setZero();
  return m;
}

}  // namespace

Eigen::MatrixXd saddle_linear_matrix(const LaplacianBundle& bundle) {
  return block_linear(bundle, -1.0);
}

Eigen::MatrixXd alpha_linear_matrix(const LaplacianBundle& bundle, double alpha) {
  return block_linear(bundle, -alpha);
}

}  // namespace dgopt
