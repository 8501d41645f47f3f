#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace jinv {

using Vec = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Matrix-free symmetric operator with an optional symmetric preconditioner
/// (the preconditioner applies an approximation of the inverse).
struct LinearOperator {
  std::size_t dim = 0;
  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> precondition;  // empty: identity

  static LinearOperator from_matrix(const SparseMatrix& a);
  static LinearOperator from_dense(const Eigen::MatrixXd& a);
};

/// Jacobi preconditioner for a sparse matrix; zero diagonals are treated as one.
std::function<Vec(const Vec&)> jacobi_preconditioner(const SparseMatrix& a);

enum class CgTermination { converged, max_iter, negative_curvature };

std::string_view to_string(CgTermination t);

struct CgReport {
  int iterations = 0;
  CgTermination termination = CgTermination::max_iter;
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // unpreconditioned ||b - A x_k||, k = 0..iterations
  Vec x;
};

/// Preconditioned conjugate gradients started from zero.
///
/// Stops when ||b - A x|| <= rtol ||b||. If a search direction with
/// p^T A p <= 0 is met the previous iterate is returned with termination
/// negative_curvature; that iterate is zero when it happens on the first step.
CgReport pcg_solve(const LinearOperator& a, const Vec& b, double rtol, int max_iter);

/// Eigenvalues of a dense symmetric matrix, ascending. Rejects matrices whose
/// asymmetry exceeds 1e-10 relative to the largest entry.
std::vector<double> dense_sym_eigenvalues(const Eigen::MatrixXd& a);

/// Dense matrix of a linear operator obtained column by column.
Eigen::MatrixXd assemble_dense(const LinearOperator& a);

/// Inverse of an SPD sparse matrix through a sparse Cholesky factorization.
/// Throws SolverError when the factorization breaks down.
std::function<Vec(const Vec&)> cholesky_inverse(const SparseMatrix& a);

/// Rows/columns of the masked dofs are zeroed and the diagonal set to one.
void apply_dirichlet(SparseMatrix& a, const std::vector<char>& mask);

}  // namespace jinv
