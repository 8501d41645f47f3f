#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "jinv/linalg.hpp"
#include "jinv/mesh.hpp"

namespace jinv {

enum class HessianMode { gauss_newton, full };

/// Pointwise data with the noise settings that produced it.
struct ObservationData {
  std::vector<Point> points;
  Vec values;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

// "JINV-OBS v1": line 1 magic, line 2 count, then "x y value" per line.
void write_observations(std::ostream& os, const ObservationData& d);
void write_observations(const std::filesystem::path& path, const ObservationData& d);
ObservationData read_observations(std::istream& is);
ObservationData read_observations(const std::filesystem::path& path);

class PoissonProblem;

/// State, adjoint and operator of the Poisson problem at a fixed parameter,
/// reused across Hessian actions.
class PoissonLinearization {
 public:
  const Vec& state() const { return u_; }
  const Vec& adjoint() const { return p_; }
  double misfit() const { return misfit_; }
  const Vec& gradient() const { return grad_; }
  Vec hvp(const Vec& dir, HessianMode mode) const;

 private:
  friend class PoissonProblem;
  const PoissonProblem* prob_ = nullptr;
  Vec m_, weight_, u_, p_, grad_;
  SparseMatrix k_;
  std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
  double misfit_ = 0.0;
};

/// -div(e^m grad u) = 1 in the unit square, u = 0 on the boundary, with
/// P2 state, P1 parameter m and pointwise observations B u.
///
/// The weight e^m is taken at element centroids (mean of the three vertex
/// values), so the misfit gradient below is the exact derivative of the
/// discrete objective 1/2 |B u(m) - d|^2.
class PoissonProblem {
 public:
  PoissonProblem(std::shared_ptr<const StructuredMesh> mesh, std::vector<Point> points);

  const FunctionSpace& state_space() const { return *state_; }
  const FunctionSpace& param_space() const { return *param_; }
  std::shared_ptr<const FunctionSpace> state_space_ptr() const { return state_; }
  std::shared_ptr<const FunctionSpace> param_space_ptr() const { return param_; }
  const std::vector<Point>& points() const { return points_; }
  const SparseMatrix& observation() const { return b_; }

  /// Sparse LDLT solve with refinement to a relative residual of 1e-12.
  /// Throws SolverError if that is not reached.
  Vec solve_state(const Vec& m) const;

  double misfit_value(const Vec& m, const Vec& data) const;
  Vec misfit_gradient(const Vec& m, const Vec& data) const;
  Vec misfit_hvp(const Vec& m, const Vec& data, const Vec& dir, HessianMode mode) const;

  PoissonLinearization linearize(const Vec& m, const Vec& data) const;

  /// d = B u(m_true) + eta, eta ~ N(0, sigma^2), sigma = noise_level * RMS(B u).
  ObservationData synthesize_data(const Vec& m_true, double noise_level, std::uint64_t seed) const;

 private:
  friend class PoissonLinearization;
  Vec weights(const Vec& m) const;
  SparseMatrix operator_matrix(const Vec& weight) const;
  using Factor = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
  std::shared_ptr<const Factor> factorize(const SparseMatrix& k) const;
  Vec solve(const SparseMatrix& k, const Factor& f, Vec rhs, const char* what) const;
  // G(a, b)_n = sum over triangles t containing vertex n of w_t/3 * a_t^T K_t b_t.
  Vec sensitivity(const Vec& weight, const Vec& a, const Vec& b) const;
  Vec stiffness_action(const Vec& weight, const Vec& v) const;
  void check_param(const Vec& m) const;
  void check_data(const Vec& d) const;

  std::shared_ptr<const FunctionSpace> state_, param_;
  std::vector<Point> points_;
  SparseMatrix b_;
  Vec load_;
  std::vector<char> boundary_;
  std::vector<Eigen::MatrixXd> local_k_;  // unit-weight local stiffness per triangle
};

}  // namespace jinv
