#include "jinv/poisson_model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "jinv/errors.hpp"
#include "jinv/fem.hpp"
#include "jinv/field_io.hpp"

namespace jinv {

void write_observations(std::ostream& os, const ObservationData& d) {
  os << "JINV-OBS v1\n" << d.points.size() << "\n";
  for (std::size_t i = 0; i < d.points.size(); ++i)
    os << format_double(d.points[i].x()) << " " << format_double(d.points[i].y()) << " "
       << format_double(d.values[static_cast<Eigen::Index>(i)]) << "\n";
}

void write_observations(const std::filesystem::path& path, const ObservationData& d) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_observations(os, d);
}

ObservationData read_observations(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "JINV-OBS v1")
    throw ConfigError("observation file: missing 'JINV-OBS v1' header");
  std::size_t count = 0;
  if (!std::getline(is, line) || !(std::istringstream(line) >> count))
    throw ConfigError("observation file: bad count line");
  ObservationData d;
  d.points.reserve(count);
  d.values.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    double x, y, v;
    if (!std::getline(is, line) || !(std::istringstream(line) >> x >> y >> v))
      throw ConfigError("observation file: bad or missing line " + std::to_string(i + 3));
    d.points.emplace_back(x, y);
    d.values[static_cast<Eigen::Index>(i)] = v;
  }
  return d;
}

ObservationData read_observations(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open observation file " + path.string());
  return read_observations(is);
}

PoissonProblem::PoissonProblem(std::shared_ptr<const StructuredMesh> mesh, std::vector<Point> points)
    : state_(build_space(mesh, 2)), param_(build_space(mesh, 1)), points_(std::move(points)) {
  b_ = point_eval_operator(*state_, points_);
  boundary_ = state_->boundary_mask();
  load_ = assemble_unit_load(*state_);
  for (std::size_t i = 0; i < boundary_.size(); ++i)
    if (boundary_[i]) load_[static_cast<Eigen::Index>(i)] = 0.0;
  local_k_.reserve(mesh->num_triangles());
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) local_k_.push_back(local_stiffness(*state_, t));
}

void PoissonProblem::check_param(const Vec& m) const {
  if (static_cast<std::size_t>(m.size()) != param_->num_dofs())
    throw std::invalid_argument("poisson: parameter has " + std::to_string(m.size()) + " entries, expected " +
                                std::to_string(param_->num_dofs()));
  if (!m.allFinite()) throw std::invalid_argument("poisson: nonfinite parameter");
}

void PoissonProblem::check_data(const Vec& d) const {
  if (static_cast<std::size_t>(d.size()) != points_.size())
    throw std::invalid_argument("poisson: data has " + std::to_string(d.size()) + " entries, expected " +
                                std::to_string(points_.size()));
}

Vec PoissonProblem::weights(const Vec& m) const {
  Vec w = centroid_values(*param_, m).array().exp().matrix();
  if (!w.allFinite() || w.minCoeff() <= 0.0) throw SolverError("poisson: coefficient e^m out of floating-point range");
  return w;
}

SparseMatrix PoissonProblem::operator_matrix(const Vec& weight) const {
  SparseMatrix k = assemble_weighted_stiffness(*state_, std::span<const double>(weight.data(), weight.size()));
  apply_dirichlet(k, boundary_);
  return k;
}

std::shared_ptr<const PoissonProblem::Factor> PoissonProblem::factorize(const SparseMatrix& k) const {
  auto f = std::make_shared<Factor>(Eigen::SparseMatrix<double>(k));
  if (f->info() != Eigen::Success) throw SolverError("poisson: stiffness factorization failed");
  return f;
}

Vec PoissonProblem::solve(const SparseMatrix& k, const Factor& f, Vec rhs, const char* what) const {
  for (std::size_t i = 0; i < boundary_.size(); ++i)
    if (boundary_[i]) rhs[static_cast<Eigen::Index>(i)] = 0.0;
  const double bn = rhs.norm();
  Vec x = f.solve(rhs);
  // Refinement steps keep the relative residual at 1e-12.
  for (int pass = 0;; ++pass) {
    const Vec r = rhs - k * x;
    const double rn = r.norm();
    if (rn <= 1e-12 * bn) break;
    if (pass == 3 || !std::isfinite(rn))
      throw SolverError(std::string("poisson ") + what + " solve: relative residual " + std::to_string(rn / bn));
    x += f.solve(r);
  }
  return x;
}

Vec PoissonProblem::sensitivity(const Vec& weight, const Vec& a, const Vec& b) const {
  const auto& mesh = state_->mesh();
  Vec per(static_cast<Eigen::Index>(mesh.num_triangles()));
  Eigen::VectorXd ae(6), be(6);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& dofs = state_->cell_dofs(t);
    for (int k = 0; k < 6; ++k) {
      ae[k] = a[dofs[k]];
      be[k] = b[dofs[k]];
    }
    per[static_cast<Eigen::Index>(t)] = weight[static_cast<Eigen::Index>(t)] * ae.dot(local_k_[t] * be);
  }
  return scatter_centroid(*param_, per);
}

Vec PoissonProblem::stiffness_action(const Vec& weight, const Vec& v) const {
  const auto& mesh = state_->mesh();
  Vec out = Vec::Zero(v.size());
  Eigen::VectorXd ve(6);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& dofs = state_->cell_dofs(t);
    for (int k = 0; k < 6; ++k) ve[k] = v[dofs[k]];
    const Eigen::VectorXd r = weight[static_cast<Eigen::Index>(t)] * (local_k_[t] * ve);
    for (int k = 0; k < 6; ++k) out[dofs[k]] += r[k];
  }
  return out;
}

Vec PoissonProblem::solve_state(const Vec& m) const {
  check_param(m);
  const SparseMatrix k = operator_matrix(weights(m));
  return solve(k, *factorize(k), load_, "state");
}

PoissonLinearization PoissonProblem::linearize(const Vec& m, const Vec& data) const {
  check_param(m);
  check_data(data);
  PoissonLinearization lin;
  lin.prob_ = this;
  lin.m_ = m;
  lin.weight_ = weights(m);
  lin.k_ = operator_matrix(lin.weight_);
  lin.factor_ = factorize(lin.k_);
  lin.u_ = solve(lin.k_, *lin.factor_, load_, "state");
  const Vec r = b_ * lin.u_ - data;
  lin.misfit_ = 0.5 * r.squaredNorm();
  lin.p_ = solve(lin.k_, *lin.factor_, -(b_.transpose() * r), "adjoint");
  lin.grad_ = sensitivity(lin.weight_, lin.p_, lin.u_);
  return lin;
}

Vec PoissonLinearization::hvp(const Vec& dir, HessianMode mode) const {
  const PoissonProblem& pb = *prob_;
  pb.check_param(dir);
  // Weight perturbation w_t * (centroid of dir).
  const Vec what = weight_.cwiseProduct(centroid_values(pb.param_space(), dir));
  const Vec uhat = pb.solve(k_, *factor_, -pb.stiffness_action(what, u_), "incremental state");
  Vec rhs = -(pb.b_.transpose() * (pb.b_ * uhat));
  if (mode == HessianMode::gauss_newton) {
    const Vec phat = pb.solve(k_, *factor_, rhs, "incremental adjoint");
    return pb.sensitivity(weight_, phat, u_);
  }
  rhs -= pb.stiffness_action(what, p_);
  const Vec phat = pb.solve(k_, *factor_, rhs, "incremental adjoint");
  return pb.sensitivity(weight_, phat, u_) + pb.sensitivity(weight_, p_, uhat) + pb.sensitivity(what, p_, u_);
}

double PoissonProblem::misfit_value(const Vec& m, const Vec& data) const {
  check_data(data);
  return 0.5 * (b_ * solve_state(m) - data).squaredNorm();
}

Vec PoissonProblem::misfit_gradient(const Vec& m, const Vec& data) const {
  return linearize(m, data).gradient();
}

Vec PoissonProblem::misfit_hvp(const Vec& m, const Vec& data, const Vec& dir, HessianMode mode) const {
  return linearize(m, data).hvp(dir, mode);
}

ObservationData PoissonProblem::synthesize_data(const Vec& m_true, double noise_level, std::uint64_t seed) const {
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level))
    throw std::invalid_argument("synthesize_data: noise level must be nonnegative");
  ObservationData d;
  d.points = points_;
  d.noise_level = noise_level;
  d.seed = seed;
  d.values = b_ * solve_state(m_true);
  if (noise_level > 0.0 && d.values.size() > 0) {
    const double rms = d.values.norm() / std::sqrt(static_cast<double>(d.values.size()));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, noise_level * rms);
    for (auto& v : d.values) v += nd(rng);
  }
  return d;
}

}  // namespace jinv
