#include "jinv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "jinv/errors.hpp"

namespace jinv {

LinearOperator LinearOperator::from_matrix(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LinearOperator: matrix not square");
  LinearOperator op;
  op.dim = static_cast<std::size_t>(a.rows());
  op.apply = [&a](const Vec& x) -> Vec { return a * x; };
  return op;
}

LinearOperator LinearOperator::from_dense(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LinearOperator: matrix not square");
  LinearOperator op;
  op.dim = static_cast<std::size_t>(a.rows());
  op.apply = [a](const Vec& x) -> Vec { return a * x; };
  return op;
}

std::function<Vec(const Vec&)> jacobi_preconditioner(const SparseMatrix& a) {
  Vec inv = a.diagonal();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] != 0.0 ? 1.0 / inv[i] : 1.0;
  return [inv](const Vec& r) -> Vec { return inv.cwiseProduct(r); };
}

std::string_view to_string(CgTermination t) {
  switch (t) {
    case CgTermination::converged: return "converged";
    case CgTermination::max_iter: return "max_iter";
    case CgTermination::negative_curvature: return "negative_curvature";
  }
  return "unknown";
}

CgReport pcg_solve(const LinearOperator& a, const Vec& b, double rtol, int max_iter) {
  if (static_cast<std::size_t>(b.size()) != a.dim)
    throw std::invalid_argument("pcg_solve: dimension mismatch (" + std::to_string(b.size()) +
                                " vs " + std::to_string(a.dim) + ")");
  if (!b.allFinite()) throw std::invalid_argument("pcg_solve: nonfinite right-hand side");
  if (!(rtol > 0.0 && rtol < 1.0)) throw std::invalid_argument("pcg_solve: rtol must lie in (0,1)");

  CgReport rep;
  rep.x = Vec::Zero(b.size());
  Vec r = b;
  const double bnorm = b.norm();
  double rnorm = bnorm;
  rep.residual_history.push_back(rnorm);
  if (bnorm == 0.0) {
    rep.termination = CgTermination::converged;
    return rep;
  }
  const double target = rtol * bnorm;

  Vec z = a.precondition ? a.precondition(r) : r;
  Vec p = z;
  double rz = r.dot(z);
  for (int k = 0; k < max_iter; ++k) {
    const Vec ap = a.apply(p);
    const double curv = p.dot(ap);
    if (!(curv > 0.0)) {
      rep.termination = CgTermination::negative_curvature;
      rep.residual_norm = rnorm;
      return rep;
    }
    const double alpha = rz / curv;
    rep.x += alpha * p;
    r -= alpha * ap;
    rnorm = r.norm();
    rep.iterations = k + 1;
    rep.residual_history.push_back(rnorm);
    if (rnorm <= target) {
      rep.termination = CgTermination::converged;
      rep.residual_norm = rnorm;
      return rep;
    }
    z = a.precondition ? a.precondition(r) : r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.termination = CgTermination::max_iter;
  rep.residual_norm = rnorm;
  return rep;
}

std::vector<double> dense_sym_eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("dense_sym_eigenvalues: matrix not square");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw std::invalid_argument("dense_sym_eigenvalues: matrix not symmetric (relative asymmetry " +
                                std::to_string(asym / scale) + ")");
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense_sym_eigenvalues: no convergence");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end());
  return ev;
}

Eigen::MatrixXd assemble_dense(const LinearOperator& a) {
  const auto n = static_cast<Eigen::Index>(a.dim);
  Eigen::MatrixXd m(n, n);
  Vec e = Vec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    m.col(j) = a.apply(e);
    e[j] = 0.0;
  }
  return m;
}

void apply_dirichlet(SparseMatrix& a, const std::vector<char>& mask) {
  if (static_cast<std::size_t>(a.rows()) != mask.size())
    throw std::invalid_argument("apply_dirichlet: mask size mismatch");
  for (Eigen::Index row = 0; row < a.outerSize(); ++row) {
    for (SparseMatrix::InnerIterator it(a, row); it; ++it) {
      const bool fixed = mask[static_cast<std::size_t>(it.row())] || mask[static_cast<std::size_t>(it.col())];
      if (fixed) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
    }
  }
  a.prune([](Eigen::Index r, Eigen::Index c, double v) { return r == c || v != 0.0; });
}

std::function<Vec(const Vec&)> cholesky_inverse(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_inverse: matrix not square");
  using Llt = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>;
  auto llt = std::make_shared<Llt>(Eigen::SparseMatrix<double>(a));
  if (llt->info() != Eigen::Success) throw SolverError("cholesky_inverse: matrix is not positive definite");
  return [llt](const Vec& r) -> Vec { return llt->solve(r); };
}

}  // namespace jinv
