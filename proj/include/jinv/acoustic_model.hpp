#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "jinv/linalg.hpp"
#include "jinv/mesh.hpp"
#include "jinv/poisson_model.hpp"  // HessianMode

namespace jinv {

/// Ricker wavelet (1 - 2 pi^2 f0^2 s^2) exp(-pi^2 f0^2 s^2), s = t - t0.
double ricker(double t, double f0, double t0);

struct WaveSource {
  Point location;
  double f0 = 2.0;  // Hz
  double t0 = 0.75; // s
};

enum class SourceProfile {
  gaussian,  // mass-normalized Gaussian of radius 1.5 h
  point      // shape functions evaluated at the source point
};

/// Time grid, sources and receivers. dt = T / steps.
struct WaveConfig {
  double final_time = 1.5;
  int steps = 0;
  double c_max = 0.0;  // largest admissible sqrt(beta/alpha)
  std::vector<WaveSource> sources;
  std::vector<Point> receivers;
  SourceProfile profile = SourceProfile::gaussian;

  double dt() const { return final_time / steps; }
};

/// Stability limit of the scheme below in units of h / c: 2 / sqrt(lambda_max(M^-1 K))
/// for P2 with the diagonally scaled mass is 0.2795 h / c on this mesh family.
inline constexpr double kStableCfl = 0.279;
inline constexpr double kDefaultCfl = 0.25;

/// Picks the smallest step count with T/steps <= c_cfl * h / c_max.
/// Throws ConfigError for c_cfl outside (0, kStableCfl] or nonpositive T or c_max.
WaveConfig make_wave_config(const StructuredMesh& mesh, double final_time, double c_max, double c_cfl,
                            std::vector<WaveSource> sources, std::vector<Point> receivers);

/// Per-source traces: receivers x (steps + 1).
struct SeismicRecord {
  std::vector<Eigen::MatrixXd> traces;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

// "JINV-TRACE v1": magic line, then per source a header line
//   source <id> f0 <f0> receivers <R> steps <S> dt <dt>
// followed by R lines of S values.
void write_record(std::ostream& os, const SeismicRecord& rec, const WaveConfig& cfg);
void write_record(const std::filesystem::path& path, const SeismicRecord& rec, const WaveConfig& cfg);
SeismicRecord read_record(std::istream& is);
SeismicRecord read_record(const std::filesystem::path& path);

using History = std::vector<Vec>;  // u^0 .. u^K

class AcousticProblem;

/// Forward and adjoint histories of all sources at a fixed (alpha, beta).
class AcousticLinearization {
 public:
  double misfit() const { return misfit_; }
  const Vec& gradient() const { return grad_; }  // [g_alpha; g_beta]
  Vec hvp(const Vec& dir, HessianMode mode) const;

 private:
  friend class AcousticProblem;
  const AcousticProblem* prob_ = nullptr;
  Vec x_;
  std::vector<History> u_, lambda_;
  double misfit_ = 0.0;
  Vec grad_;
};

/// alpha u_tt - div(beta grad u) = f in the unit square; beta du/dn = 0 on
/// top; beta du/dn = -sqrt(alpha beta) u_t on left, bottom and right.
///
/// P2 state, P1 alpha and beta (stacked as x = [alpha; beta]). Explicit
/// central differences in time:
///   M (u+ - 2u + u-)/dt^2 + C (u+ - u-)/(2 dt) + K u = F,
/// with M the diagonally scaled (HRZ) P2 mass weighted by alpha at centroids, C the
/// lumped boundary mass weighted by sqrt(alpha beta) of edge means, K the
/// stiffness weighted by beta at centroids, u^0 = u^-1 = 0. Gradients and
/// Hessian actions are exact derivatives of this discrete scheme.
class AcousticProblem {
 public:
  AcousticProblem(std::shared_ptr<const StructuredMesh> mesh, WaveConfig config);

  const WaveConfig& config() const { return cfg_; }
  const FunctionSpace& state_space() const { return *state_; }
  const FunctionSpace& param_space() const { return *param_; }
  std::shared_ptr<const FunctionSpace> param_space_ptr() const { return param_; }
  std::size_t param_dim() const { return 2 * param_->num_dofs(); }

  /// Throws SolverError on instability or when sqrt(beta/alpha) exceeds c_max.
  History solve_forward(const Vec& x, std::size_t source) const;
  /// B u^k for k = 0..K.
  Eigen::MatrixXd traces(const History& u) const;
  SeismicRecord clean_record(const Vec& x) const;

  /// 1/(2 Ns) sum_i int_0^T |B u_i - d_i|^2 dt, trapezoid rule in time.
  double misfit_value(const Vec& x, const SeismicRecord& data) const;
  Vec misfit_gradient(const Vec& x, const SeismicRecord& data) const;
  Vec misfit_hvp(const Vec& x, const SeismicRecord& data, const Vec& dir, HessianMode mode) const;
  AcousticLinearization linearize(const Vec& x, const SeismicRecord& data) const;

  /// Clean traces plus N(0, sigma^2) noise, sigma = RMS(all traces) * 10^(-snr_db/20).
  /// snr_db = +inf gives clean traces.
  SeismicRecord synthesize_records(const Vec& x_true, double snr_db, std::uint64_t seed) const;

  /// Discrete energy 1/2 |u+ - u|_M^2 / dt^2 + 1/2 u+^T K u between levels k and k+1.
  std::vector<double> energy(const Vec& x, const History& u) const;

  /// Source time function values f(t_k) times the spatial profile.
  Vec source_vector(std::size_t source) const { return profiles_.at(source); }

 private:
  friend class AcousticLinearization;
  struct Operators {
    Vec m, c, a;  // diagonals of M, C and A = M/dt^2 + C/(2 dt)
    SparseMatrix k;
  };
  struct Coefs {
    Vec alpha_c, beta_c;          // per triangle
    Vec alpha_e, beta_e;          // per absorbing edge
  };
  Coefs coefficients(const Vec& x) const;
  Operators operators(const Coefs& c) const;
  Operators perturbation(const Coefs& c, const Vec& dir) const;  // derivative of the operators along dir
  void check_param(const Vec& x) const;
  void check_record(const SeismicRecord& d) const;

  // Generic sweeps. forward: A u+ = (2M/dt^2 - K) u - (M/dt^2 - C/2dt) u- + rhs(k).
  History sweep_forward(const Operators& op, const std::function<Vec(int)>& rhs) const;
  // backward: A l^j = rhs(j) - (K - 2M/dt^2) l^{j+1} - (M/dt^2 - C/2dt) l^{j+2}, j = K..1.
  History sweep_backward(const Operators& op, const std::function<Vec(int)>& rhs) const;
  // Derivative of sum_k l^{k+1}^T R^k(u) with respect to x (l stored as l[0..K], l[0] unused).
  Vec sensitivity(const Coefs& c, const History& l, const History& u) const;
  // Second derivative term of the absorbing coefficient along dir.
  Vec absorbing_second(const Coefs& c, const Vec& dir, const History& l, const History& u) const;
  Vec residual_weighted(const Eigen::MatrixXd& res, int k) const;  // time weight * B^T r_k / (Ns)

  std::shared_ptr<const FunctionSpace> state_, param_;
  WaveConfig cfg_;
  SparseMatrix b_;
  std::vector<Vec> profiles_;
  std::vector<Vec> lumped_;               // per triangle, 6 HRZ weights
  std::vector<Eigen::MatrixXd> local_k_;  // unit local stiffness
  struct AbsorbingEdge {
    std::array<int, 2> vertices;      // P1 dofs
    std::array<int, 3> dofs;          // P2 dofs: v0, mid, v1
    std::array<double, 3> weights;    // L/6, 2L/3, L/6
  };
  std::vector<AbsorbingEdge> edges_;
};

}  // namespace jinv
