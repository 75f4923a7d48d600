#include "dgopt/graph.hpp"

#include "dgopt/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace dgopt {

WeightedDigraph::WeightedDigraph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {
  if (adjacency_.rows() < 1) throw InputError("graph must have at least one agent");
  if (adjacency_.rows() != adjacency_.cols())
    throw InputError("adjacency matrix must be square, got " + std::to_string(adjacency_.rows()) +
                     "x" + std::to_string(adjacency_.cols()));
  for (Eigen::Index i = 0; i < adjacency_.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency_.cols(); ++j) {
      const double w = adjacency_(i, j);
      if (!std::isfinite(w) || w < 0.0)
        throw InputError("adjacency weight (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") must be finite and nonnegative");
    }
    if (adjacency_(i, i) != 0.0)
      throw InputError("adjacency diagonal entry " + std::to_string(i) + " must be zero");
  }
}

WeightedDigraph WeightedDigraph::from_edges(
    int n, const std::vector<std::tuple<int, int, double>>& edges) {
  if (n < 1) throw InputError("graph must have at least one agent");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j, w] : edges) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw InputError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") out of range for n = " + std::to_string(n));
    a(i, j) += w;
  }
  return WeightedDigraph(std::move(a));
}

WeightedDigraph WeightedDigraph::symmetrized() const {
  return WeightedDigraph(0.5 * (adjacency_ + adjacency_.transpose()));
}

BalanceReport is_weight_balanced(const WeightedDigraph& g, double tol) {
  const double imbalance = (g.out_degree() - g.in_degree()).cwiseAbs().maxCoeff();
  return {imbalance <= tol, imbalance};
}

std::vector<std::vector<int>> strongly_connected_components(const WeightedDigraph& g) {
  const int n = g.size();
  std::vector<int> index(n, -1), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::vector<int>> sccs;
  int next_index = 0;

  // Explicit DFS stack of (vertex, next successor to try).
  std::vector<std::pair<int, int>> work;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    work.emplace_back(root, 0);
    while (!work.empty()) {
      auto& [v, succ] = work.back();
      if (succ == 0 && index[v] == -1) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (succ < n) {
        const int w = succ++;
        if (g.weight(v, w) <= 0.0) continue;
        if (index[w] == -1) {
          work.emplace_back(w, 0);
          descended = true;
          break;
        }
        if (on_stack[w]) lowlink[v] = std::min(lowlink[v], index[w]);
      }
      if (descended) continue;

      if (lowlink[v] == index[v]) {
        std::vector<int> component;
        int w = -1;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component.push_back(w);
        } while (w != v);
        std::sort(component.begin(), component.end());
        sccs.push_back(std::move(component));
      }
      const int finished = v;
      work.pop_back();
      if (!work.empty()) {
        const int parent = work.back().first;
        lowlink[parent] = std::min(lowlink[parent], lowlink[finished]);
      }
    }
  }
  return sccs;
}

bool is_strongly_connected(const WeightedDigraph& g) {
  return strongly_connected_components(g).size() == 1;
}

LaplacianBundle build_laplacian(const WeightedDigraph& g, int d, double balance_tol) {
  if (d < 1) throw InputError("state dimension d must be positive");

  LaplacianBundle b;
  b.laplacian = laplacian(g.adjacency());
  b.out_degree = g.out_degree();
  b.dimension_d = d;
  b.lifted = kron_identity(b.laplacian, d);
  b.zero_tol = kEigZeroTol * b.laplacian.norm();
  b.balance = is_weight_balanced(g, balance_tol);
  b.strongly_connected = is_strongly_connected(g);

  Eigen::EigenSolver<Eigen::MatrixXd> es(b.laplacian, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw EigenSolverError("eigensolver did not converge on the Laplacian");
  b.eigvals = es.eigenvalues();
  b.eigvecs = es.eigenvectors();

  const Eigen::MatrixXd sym = b.laplacian + b.laplacian.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ses(sym, Eigen::EigenvaluesOnly);
  if (ses.info() != Eigen::Success)
    throw EigenSolverError("eigensolver did not converge on L + L^T");
  b.sym_eigvals = ses.eigenvalues();

  const double sym_zero_tol = kEigZeroTol * sym.norm();
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : b.sym_eigvals)
    if (std::abs(lambda) > sym_zero_tol && std::abs(lambda) < std::abs(best)) best = lambda;
  b.lambda_star_sym = std::isfinite(best) ? best : 0.0;
  return b;
}

}  // namespace dgopt
