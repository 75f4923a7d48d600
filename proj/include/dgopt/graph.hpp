#ifndef DGOPT_GRAPH_HPP
#define DGOPT_GRAPH_HPP

#include <Eigen/Dense>

#include <complex>
#include <tuple>
#include <vector>

namespace dgopt {

/// Laplacian D_out - A of an adjacency matrix whose row i holds the
/// out-weights a_ij of vertex i.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
laplacian(const Eigen::MatrixBase<Derived>& adjacency) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> lap = -adjacency;
  lap.diagonal() += adjacency.rowwise().sum();
  return lap;
}

/// M ⊗ I_d.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
kron_identity(const Eigen::MatrixBase<Derived>& m, Eigen::Index d) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m.rows() * d, m.cols() * d);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != Scalar(0))
        out.block(i * d, j * d, d, d).diagonal().setConstant(m(i, j));
  return out;
}

/// Applies (M ⊗ I_d) to a stacked vector without forming the lifted matrix.
/// Block i of the result is sum_j m(i, j) * v^j.
template <typename DerivedM, typename DerivedV>
Eigen::Matrix<typename DerivedV::Scalar, Eigen::Dynamic, 1>
apply_lifted(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v,
             Eigen::Index d) {
  using Scalar = typename DerivedV::Scalar;
  const Eigen::Index n = m.rows();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> in = v;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n * d);
  // Column i of the d x n view is block v^i.
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> blocks(in.data(), d, n);
  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> result(out.data(), d, n);
  result.noalias() = blocks * m.transpose().template cast<Scalar>();
  return out;
}

/// Weighted digraph on n agents. Entry (i, j) of the adjacency matrix is the
/// weight of edge (v_i, v_j), meaning v_i receives information from v_j.
class WeightedDigraph {
 public:
  /// Throws InputError unless the matrix is square, n >= 1, all weights are
  /// finite and nonnegative, and the diagonal is zero.
  explicit WeightedDigraph(Eigen::MatrixXd adjacency);

  /// Builds from (i, j, w) triples with 0-based indices. Repeated edges add.
  static WeightedDigraph from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges);

  int size() const { return static_cast<int>(adjacency_.rows()); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  double weight(int i, int j) const { return adjacency_(i, j); }

  Eigen::VectorXd out_degree() const { return adjacency_.rowwise().sum(); }
  Eigen::VectorXd in_degree() const { return adjacency_.colwise().sum().transpose(); }

  /// ½(A + Aᵀ): the undirected graph carrying the same total weights.
  WeightedDigraph symmetrized() const;

 private:
  Eigen::MatrixXd adjacency_;
};

struct BalanceReport {
  bool balanced = false;
  double max_imbalance = 0.0;
};

inline constexpr double kDefaultBalanceTol = 1e-6;
inline constexpr double kEigZeroTol = 1e-9;

/// max_i |out-degree(v_i) - in-degree(v_i)| compared against tol.
BalanceReport is_weight_balanced(const WeightedDigraph& g, double tol = kDefaultBalanceTol);

/// Strongly connected components (Tarjan) treating a_ij > 0 as edge i -> j.
/// Components are listed in reverse topological order of the condensation.
std::vector<std::vector<int>> strongly_connected_components(const WeightedDigraph& g);

bool is_strongly_connected(const WeightedDigraph& g);

/// Laplacian data shared by the analysis and dynamics code.
struct LaplacianBundle {
  Eigen::MatrixXd laplacian;    // L = D_out - A
  Eigen::VectorXd out_degree;
  int dimension_d = 1;
  Eigen::MatrixXd lifted;       // L ⊗ I_d
  Eigen::VectorXcd eigvals;     // spectrum of L
  Eigen::MatrixXcd eigvecs;     // right eigenvectors, column k pairs with eigvals(k)
  Eigen::VectorXd sym_eigvals;  // spectrum of L + Lᵀ, ascending
  double lambda_star_sym = 0.0; // nonzero eigenvalue of L + Lᵀ with least |·|, 0 if none
  double zero_tol = 0.0;        // absolute threshold below which |λ| counts as zero
  BalanceReport balance;
  bool strongly_connected = false;

  int n() const { return static_cast<int>(laplacian.rows()); }
  int nd() const { return n() * dimension_d; }

  /// (L ⊗ I_d) v.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    return apply_lifted(laplacian, v, dimension_d);
  }

  bool is_nonzero_eigenvalue(std::complex<double> lambda) const {
    return std::abs(lambda) > zero_tol;
  }
};

/// Builds L, its Kronecker lift and both spectra. Eigenvalues with
/// |λ| <= kEigZeroTol * ‖L‖_F are classified as zero. Throws
/// EigenSolverError if either dense eigensolver fails, InputError if d < 1.
LaplacianBundle build_laplacian(const WeightedDigraph& g, int d,
                                double balance_tol = kDefaultBalanceTol);

}  // namespace dgopt

#endif  // DGOPT_GRAPH_HPP
