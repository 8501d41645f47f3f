#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "jinv/linalg.hpp"
#include "jinv/mesh.hpp"

// Joint regularization of a parameter pair (m1, m2) of P1 fields.
//
// A pair is passed around as one stacked vector x = [m1; m2] of length 2n,
// n = number of P1 dofs. Every functional here is an exact sum over
// triangles of area * f(grad m1, grad m2) since P1 gradients are constant
// per triangle.

namespace jinv {

enum class RegKind { tv_independent, cross_gradient, normalized_cross_gradient, vtv, nuclear };

std::string_view to_string(RegKind k);

/// Accepts the long names above and the short forms tv, cg, ncg, vtv, nn.
/// Throws ConfigError otherwise.
RegKind parse_reg_kind(std::string_view name);

/// Hyperparameters. Unset values are "not given"; validate() checks the set
/// required by each kind.
struct RegConfig {
  RegKind kind = RegKind::vtv;
  std::optional<double> gamma1, gamma2, gamma;
  std::optional<double> eps_tv, eps_joint;
  std::optional<double> precond_shift;

  /// Throws ConfigError when the hyperparameter set does not match the kind:
  ///   cross_gradient, normalized_cross_gradient: gamma1, gamma2, gamma, eps_tv, eps_joint
  ///   vtv, nuclear: gamma, eps_joint (gamma1/gamma2 may only be given as 0)
  ///   tv_independent: gamma1, gamma2, eps_tv
  void validate() const;

  /// precond_shift if set, else 1e-8 times the largest weight.
  double shift() const;
};

struct ValueGrad {
  double value = 0.0;
  Vec gradient;
};

/// Stacks two P1 coefficient vectors.
Vec stack_pair(const Vec& m1, const Vec& m2);

struct Svd2 {
  Eigen::Matrix2d u;
  Eigen::Vector2d sigma;  // sigma(0) >= sigma(1) >= 0
  Eigen::Matrix2d v;      // G = u * diag(sigma) * v^T
};

/// Closed-form SVD of a 2x2 matrix. Throws std::invalid_argument on nonfinite input.
Svd2 svd2x2(const Eigen::Matrix2d& g);

// Single-field TV: gamma * sum area * sqrt(|grad m|^2 + eps). m has length n.
ValueGrad tv_value_grad(const FunctionSpace& p1, const Vec& m, double eps, double gamma);
Vec tv_hessian_apply(const FunctionSpace& p1, const Vec& m, const Vec& dir, double eps, double gamma);
SparseMatrix tv_hessian_matrix(const FunctionSpace& p1, const Vec& m, double eps, double gamma);

// Cross-gradient: 1/2 sum area * (|g1|^2 |g2|^2 - (g1.g2)^2).
ValueGrad cg_value_grad(const FunctionSpace& p1, const Vec& x);
Vec cg_hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir);
/// With block_diagonal set only the D(m2), D(m1) diagonal blocks are kept.
SparseMatrix cg_hessian_matrix(const FunctionSpace& p1, const Vec& x, bool block_diagonal = false);

// Normalized cross-gradient: 1/2 sum area * (1 - (g1.g2)^2 / ((|g1|^2+eps)(|g2|^2+eps))).
ValueGrad ncg_value_grad(const FunctionSpace& p1, const Vec& x, double eps);
Vec ncg_hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir, double eps);
SparseMatrix ncg_hessian_matrix(const FunctionSpace& p1, const Vec& x, double eps,
                                bool block_diagonal = false);

// Vectorial TV: gamma * sum area * sqrt(|g1|^2 + |g2|^2 + eps).
ValueGrad vtv_value_grad(const FunctionSpace& p1, const Vec& x, double eps, double gamma);
Vec vtv_hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir, double eps, double gamma);
SparseMatrix vtv_hessian_matrix(const FunctionSpace& p1, const Vec& x, double eps, double gamma);

// Nuclear norm of G = [g1 | g2]: gamma * sum area * (sqrt(s1^2+eps) + sqrt(s2^2+eps)).
// No Hessian: the functional is not twice differentiable where s1 = s2.
ValueGrad nn_value_grad(const FunctionSpace& p1, const Vec& x, double eps, double gamma);

class JointRegularizer {
 public:
  /// Validates the config.
  JointRegularizer(RegConfig config, std::shared_ptr<const FunctionSpace> p1);

  const RegConfig& config() const { return cfg_; }
  const FunctionSpace& space() const { return *space_; }
  std::size_t dim() const { return 2 * space_->num_dofs(); }
  bool has_hessian() const { return cfg_.kind != RegKind::nuclear; }

  double value(const Vec& x) const { return value_grad(x).value; }
  ValueGrad value_grad(const Vec& x) const;
  /// Throws std::logic_error for the nuclear kind.
  Vec hessian_apply(const Vec& x, const Vec& dir) const;
  SparseMatrix hessian_matrix(const Vec& x) const;

  /// SPD matrix used to precondition Newton systems at x:
  ///   tv_independent, normalized_cross_gradient: TV Hessians + shift * mass
  ///   cross_gradient: TV Hessians + gamma * block-diagonal cross-gradient Hessian + shift * mass
  ///   vtv, nuclear: gamma * VTV Hessian + shift * mass
  SparseMatrix preconditioner_matrix(const Vec& x) const;

  /// cholesky_inverse(preconditioner_matrix(x)).
  std::function<Vec(const Vec&)> preconditioner(const Vec& x) const;

 private:
  RegConfig cfg_;
  std::shared_ptr<const FunctionSpace> space_;
  SparseMatrix mass2_;  // blkdiag(M, M)
};

JointRegularizer joint_reg_build(const RegConfig& config, std::shared_ptr<const FunctionSpace> p1);

struct Spectrum {
  std::vector<double> eigenvalues;                 // ascending
  std::vector<double> block_diagonal_eigenvalues;  // cross-gradient kinds only
  double negative_fraction = 0.0;                  // share of eigenvalues below -1e-8 * max |lambda|
};

/// Dense spectrum of the Hessian of one term at x, with unit weight:
///   tv_independent: both TV Hessians (eps)
///   cross_gradient, normalized_cross_gradient: the similarity term alone
///   vtv: the VTV Hessian
/// Throws std::invalid_argument for the nuclear kind.
Spectrum reg_hessian_spectrum(RegKind kind, const FunctionSpace& p1, const Vec& x, double eps);

double negative_fraction(const std::vector<double>& ascending, double rel_tol = 1e-8);

}  // namespace jinv
