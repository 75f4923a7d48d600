// Reference computations for the tests. Nothing here calls into dgopt, so a
// bug in the library cannot hide behind a matching bug in its own check.

#ifndef DGOPT_TESTS_ORACLES_HPP
#define DGOPT_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// The printed 5-agent adjacency matrix, row i holding the out-weights of i.
inline Eigen::MatrixXd example_adjacency() {
  Eigen::MatrixXd a(5, 5);
  a << 0, 0.5326, 0.1654, 0.0004, 0.0002,
       0.0595, 0, 0.6676, 0.0681, 0.1230,
       0.0213, 0.0004, 0, 0.5809, 0.3181,
       0.0248, 0.2458, 0, 0, 0.5587,
       0.5930, 0.1394, 0.0877, 0.1799, 0;
  return a;
}

/// D_out − A by explicit loops.
inline Eigen::MatrixXd laplacian_loops(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double out = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      out += a(i, j);
      if (i != j) l(i, j) = -a(i, j);
    }
    l(i, i) = out;
  }
  return l;
}

/// Directed n-cycle with unit weights (i receives from i+1): L is circulant,
/// with eigenvalues 1 − exp(2πik/n).
inline std::vector<std::complex<double>> cycle_eigenvalues(int n) {
  std::vector<std::complex<double>> out;
  for (int k = 0; k < n; ++k)
    out.push_back(1.0 - std::polar(1.0, 2.0 * std::numbers::pi * k / n));
  return out;
}

/// Bisection on a bracket [lo, hi] with a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14,
                     int max_iter = 500) {
  double flo = f(lo);
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Stationary point of e^x + (x − 3)² + (x + 3)² + x⁴ + 4, where the
/// derivative e^x + 4x + 4x³ changes sign on [−1, 0].
inline double figure_root() {
  return bisect([](double x) { return std::exp(x) + 4.0 * x + 4.0 * x * x * x; }, -1.0, 0.0);
}

/// Design function written out literally, without the cancellation-free
/// rewrite used in the library. Accurate enough for moderate r.
inline double h_direct(double r, double lambda, double k) {
  const double x = (r * r + 1.0) * (r * r + 2.0) / r;
  return 0.5 * lambda * (-x + std::sqrt(x * x - 4.0)) + k * r * r / (1.0 + r * r);
}

/// Smallest positive root of h_direct: doubling scan, then bisection. The
/// scan starts at 1e-4, where the literal formula still has ~12 good digits;
/// the test grid keeps β* well above that.
inline double h_root(double lambda, double k) {
  double lo = 1e-4;
  double hi = lo;
  while (h_direct(hi, lambda, k) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  return bisect([&](double r) { return h_direct(r, lambda, k); }, lo, hi, 1e-15);
}

/// Median of a sample with an odd count.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

/// Distance of a stacked vector x (n blocks of size d) to the agreement subspace.
inline double agreement_distance(const Eigen::VectorXd& x, int n, int d) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) mean += x.segment(i * d, d);
  mean /= n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (x.segment(i * d, d) - mean).squaredNorm();
  return std::sqrt(s);
}

/// Central difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle

#endif  // DGOPT_TESTS_ORACLES_HPP
