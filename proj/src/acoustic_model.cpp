#include "jinv/acoustic_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "jinv/errors.hpp"
#include "jinv/fem.hpp"
#include "jinv/field_io.hpp"

namespace jinv {

double ricker(double t, double f0, double t0) {
  if (!(f0 > 0.0)) throw std::invalid_argument("ricker: f0 must be positive");
  const double a = std::numbers::pi * std::numbers::pi * f0 * f0 * (t - t0) * (t - t0);
  return (1.0 - 2.0 * a) * std::exp(-a);
}

WaveConfig make_wave_config(const StructuredMesh& mesh, double final_time, double c_max, double c_cfl,
                            std::vector<WaveSource> sources, std::vector<Point> receivers) {
  if (!(c_cfl > 0.0 && c_cfl <= kStableCfl))
    throw ConfigError("wave: CFL constant " + std::to_string(c_cfl) + " outside the stable range (0, " +
                      std::to_string(kStableCfl) + "]");
  if (!(final_time > 0.0) || !std::isfinite(final_time)) throw ConfigError("wave: final time must be positive");
  if (!(c_max > 0.0) || !std::isfinite(c_max)) throw ConfigError("wave: c_max must be positive");
  WaveConfig cfg;
  cfg.final_time = final_time;
  cfg.c_max = c_max;
  cfg.steps = static_cast<int>(std::ceil(final_time / (c_cfl * mesh.h() / c_max) - 1e-9));
  cfg.sources = std::move(sources);
  cfg.receivers = std::move(receivers);
  return cfg;
}

void write_record(std::ostream& os, const SeismicRecord& rec, const WaveConfig& cfg) {
  if (rec.traces.size() != cfg.sources.size())
    throw std::invalid_argument("write_record: record and config disagree on the source count");
  os << "JINV-TRACE v1\n";
  for (std::size_t i = 0; i < rec.traces.size(); ++i) {
    const auto& tr = rec.traces[i];
    os << "source " << i << " f0 " << format_double(cfg.sources[i].f0) << " receivers " << tr.rows() << " steps "
       << tr.cols() << " dt " << format_double(cfg.dt()) << "\n";
    for (Eigen::Index r = 0; r < tr.rows(); ++r) {
      for (Eigen::Index c = 0; c < tr.cols(); ++c) os << (c ? " " : "") << format_double(tr(r, c));
      os << "\n";
    }
  }
}

void write_record(const std::filesystem::path& path, const SeismicRecord& rec, const WaveConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_record(os, rec, cfg);
}

SeismicRecord read_record(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "JINV-TRACE v1")
    throw ConfigError("trace file: missing 'JINV-TRACE v1' header");
  SeismicRecord rec;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream hdr(line);
    std::string ks, kf, kr, kn, kd;
    std::size_t id = 0;
    double f0 = 0, dt = 0;
    Eigen::Index nr = 0, ns = 0;
    if (!(hdr >> ks >> id >> kf >> f0 >> kr >> nr >> kn >> ns >> kd >> dt) || ks != "source" || kf != "f0" ||
        kr != "receivers" || kn != "steps" || kd != "dt" || id != rec.traces.size() || nr < 0 || ns < 0)
      throw ConfigError("trace file: malformed source header '" + line + "'");
    Eigen::MatrixXd tr(nr, ns);
    for (Eigen::Index r = 0; r < nr; ++r) {
      if (!std::getline(is, line)) throw ConfigError("trace file: truncated trace matrix");
      std::istringstream row(line);
      for (Eigen::Index c = 0; c < ns; ++c)
        if (!(row >> tr(r, c))) throw ConfigError("trace file: short trace row");
    }
    rec.traces.push_back(std::move(tr));
  }
  return rec;
}

SeismicRecord read_record(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open trace file " + path.string());
  return read_record(is);
}

namespace {

int p2_index(int n, int vertex) {
  const int i = vertex % (n + 1), j = vertex / (n + 1);
  return 2 * j * (2 * n + 1) + 2 * i;
}

bool absorbing(BoundarySide s) { return s != BoundarySide::top; }

}  // namespace

AcousticProblem::AcousticProblem(std::shared_ptr<const StructuredMesh> mesh, WaveConfig config)
    : state_(build_space(mesh, 2)), param_(build_space(mesh, 1)), cfg_(std::move(config)) {
  if (cfg_.steps < 1) throw ConfigError("wave: need at least one time step");
  if (!(cfg_.c_max > 0.0)) throw ConfigError("wave: c_max must be positive");
  if (cfg_.dt() > kStableCfl * mesh->h() / cfg_.c_max * (1 + 1e-12))
    throw ConfigError("wave: time step " + std::to_string(cfg_.dt()) + " violates the stability bound dt <= " +
                      std::to_string(kStableCfl) + " h / c_max");
  if (cfg_.sources.empty()) throw ConfigError("wave: no sources");
  b_ = point_eval_operator(*state_, cfg_.receivers);

  const auto nt = mesh->num_triangles();
  local_k_.reserve(nt);
  lumped_.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    local_k_.push_back(local_stiffness(*state_, t));
    // Diagonal scaling of the consistent P2 mass: vertices A/19, edges 16A/57.
    const double a = mesh->triangle_area(t);
    Vec w(6);
    w << a / 19, a / 19, a / 19, 16 * a / 57, 16 * a / 57, 16 * a / 57;
    lumped_.push_back(w);
  }
  const int n = mesh->n();
  for (const auto& e : mesh->boundary_edges()) {
    if (!absorbing(e.side)) continue;
    AbsorbingEdge ae;
    ae.vertices = e.vertices;
    const int d0 = p2_index(n, e.vertices[0]), d1 = p2_index(n, e.vertices[1]);
    ae.dofs = {d0, (d0 + d1) / 2, d1};
    const double len = (mesh->vertices()[e.vertices[0]] - mesh->vertices()[e.vertices[1]]).norm();
    ae.weights = {len / 6, 2 * len / 3, len / 6};
    edges_.push_back(ae);
  }

  const SparseMatrix mass = assemble_mass(*state_);
  const double h = mesh->h();
  for (const auto& s : cfg_.sources) {
    Vec prof;
    if (cfg_.profile == SourceProfile::point) {
      prof = Vec(point_eval_operator(*state_, {s.location}).transpose());
    } else {
      const double r = 1.5 * h;
      const auto& xs = state_->dof_coordinates();
      Vec g(static_cast<Eigen::Index>(xs.size()));
      for (std::size_t i = 0; i < xs.size(); ++i)
        g[static_cast<Eigen::Index>(i)] = std::exp(-(xs[i] - s.location).squaredNorm() / (r * r));
      prof = mass * g;
      prof /= prof.sum();
    }
    profiles_.push_back(prof);
  }
}

void AcousticProblem::check_param(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != param_dim())
    throw std::invalid_argument("acoustic: parameter vector has " + std::to_string(x.size()) + " entries, expected " +
                                std::to_string(param_dim()));
  if (!x.allFinite()) throw SolverError("acoustic: nonfinite parameters");
  const auto n = static_cast<Eigen::Index>(param_->num_dofs());
  if (x.head(n).minCoeff() <= 0.0 || x.tail(n).minCoeff() <= 0.0)
    throw SolverError("acoustic: alpha and beta must be positive");
  const double cmax = (x.tail(n).array() / x.head(n).array()).sqrt().maxCoeff();
  if (cmax > cfg_.c_max * (1 + 1e-12))
    throw SolverError("acoustic: wave speed " + std::to_string(cmax) + " exceeds the CFL design speed " +
                      std::to_string(cfg_.c_max));
}

void AcousticProblem::check_record(const SeismicRecord& d) const {
  if (d.traces.size() != cfg_.sources.size())
    throw std::invalid_argument("acoustic: record has " + std::to_string(d.traces.size()) + " sources, expected " +
                                std::to_string(cfg_.sources.size()));
  for (const auto& t : d.traces)
    if (t.rows() != static_cast<Eigen::Index>(cfg_.receivers.size()) || t.cols() != cfg_.steps + 1)
      throw std::invalid_argument("acoustic: record does not match the receiver/time grid");
}

AcousticProblem::Coefs AcousticProblem::coefficients(const Vec& x) const {
  const auto n = static_cast<Eigen::Index>(param_->num_dofs());
  Coefs c;
  c.alpha_c = centroid_values(*param_, x.head(n));
  c.beta_c = centroid_values(*param_, x.tail(n));
  c.alpha_e.resize(static_cast<Eigen::Index>(edges_.size()));
  c.beta_e.resize(static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& v = edges_[e].vertices;
    c.alpha_e[static_cast<Eigen::Index>(e)] = 0.5 * (x[v[0]] + x[v[1]]);
    c.beta_e[static_cast<Eigen::Index>(e)] = 0.5 * (x[n + v[0]] + x[n + v[1]]);
  }
  return c;
}

namespace {

SparseMatrix weighted_stiffness(const FunctionSpace& s, const std::vector<Eigen::MatrixXd>& local, const Vec& w) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(local.size() * 36);
  for (std::size_t t = 0; t < local.size(); ++t) {
    const auto& dofs = s.cell_dofs(t);
    const double wt = w[static_cast<Eigen::Index>(t)];
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) trip.emplace_back(dofs[a], dofs[b], wt * local[t](a, b));
  }
  const auto nd = static_cast<Eigen::Index>(s.num_dofs());
  SparseMatrix k(nd, nd);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

}  // namespace

AcousticProblem::Operators AcousticProblem::operators(const Coefs& c) const {
  const auto nd = static_cast<Eigen::Index>(state_->num_dofs());
  const double dt = cfg_.dt();
  Operators op;
  op.m = Vec::Zero(nd);
  for (std::size_t t = 0; t < lumped_.size(); ++t) {
    const auto& dofs = state_->cell_dofs(t);
    for (int i = 0; i < 6; ++i) op.m[dofs[i]] += c.alpha_c[static_cast<Eigen::Index>(t)] * lumped_[t][i];
  }
  op.c = Vec::Zero(nd);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    const double coef = std::sqrt(c.alpha_e[ei] * c.beta_e[ei]);
    for (int i = 0; i < 3; ++i) op.c[edges_[e].dofs[i]] += coef * edges_[e].weights[i];
  }
  op.k = weighted_stiffness(*state_, local_k_, c.beta_c);
  op.a = op.m / (dt * dt) + op.c / (2 * dt);
  return op;
}

AcousticProblem::Operators AcousticProblem::perturbation(const Coefs& c, const Vec& dir) const {
  const Coefs d = coefficients(dir);
  const auto nd = static_cast<Eigen::Index>(state_->num_dofs());
  const double dt = cfg_.dt();
  Operators op;
  op.m = Vec::Zero(nd);
  for (std::size_t t = 0; t < lumped_.size(); ++t) {
    const auto& dofs = state_->cell_dofs(t);
    for (int i = 0; i < 6; ++i) op.m[dofs[i]] += d.alpha_c[static_cast<Eigen::Index>(t)] * lumped_[t][i];
  }
  op.c = Vec::Zero(nd);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    const double a = c.alpha_e[ei], b = c.beta_e[ei];
    const double coef = 0.5 * std::sqrt(b / a) * d.alpha_e[ei] + 0.5 * std::sqrt(a / b) * d.beta_e[ei];
    for (int i = 0; i < 3; ++i) op.c[edges_[e].dofs[i]] += coef * edges_[e].weights[i];
  }
  op.k = weighted_stiffness(*state_, local_k_, d.beta_c);
  op.a = op.m / (dt * dt) + op.c / (2 * dt);
  return op;
}

History AcousticProblem::sweep_forward(const Operators& op, const std::function<Vec(int)>& rhs) const {
  const int steps = cfg_.steps;
  const double dt = cfg_.dt();
  const auto nd = static_cast<Eigen::Index>(state_->num_dofs());
  const Vec m2 = 2.0 * op.m / (dt * dt);
  const Vec mc = op.m / (dt * dt) - op.c / (2 * dt);
  History u(static_cast<std::size_t>(steps) + 1, Vec::Zero(nd));
  const Vec zero = Vec::Zero(nd);
  double scale = 0.0;
  for (int k = 0; k < steps; ++k) {
    const Vec& uk = u[k];
    const Vec& um = k > 0 ? u[k - 1] : zero;
    const Vec f = rhs(k);
    scale = std::max(scale, f.cwiseQuotient(op.a).lpNorm<Eigen::Infinity>());
    Vec r = m2.cwiseProduct(uk) - op.k * uk - mc.cwiseProduct(um) + f;
    u[k + 1] = r.cwiseQuotient(op.a);
    const double un = u[k + 1].lpNorm<Eigen::Infinity>();
    if (!std::isfinite(un) || un > 1e8 * scale * (steps + 1.0) * (steps + 1.0))
      throw SolverError("acoustic: time stepping unstable at step " + std::to_string(k + 1) + " (|u| = " +
                        std::to_string(un) + ")");
  }
  return u;
}

History AcousticProblem::sweep_backward(const Operators& op, const std::function<Vec(int)>& rhs) const {
  const int steps = cfg_.steps;
  const double dt = cfg_.dt();
  const auto nd = static_cast<Eigen::Index>(state_->num_dofs());
  const Vec m2 = 2.0 * op.m / (dt * dt);
  const Vec mc = op.m / (dt * dt) - op.c / (2 * dt);
  History l(static_cast<std::size_t>(steps) + 1, Vec::Zero(nd));
  const Vec zero = Vec::Zero(nd);
  for (int j = steps; j >= 1; --j) {
    const Vec& l1 = j + 1 <= steps ? l[j + 1] : zero;
    const Vec& l2 = j + 2 <= steps ? l[j + 2] : zero;
    Vec r = rhs(j) - op.k * l1 + m2.cwiseProduct(l1) - mc.cwiseProduct(l2);
    l[j] = r.cwiseQuotient(op.a);
    if (!l[j].allFinite()) throw SolverError("acoustic: adjoint sweep produced nonfinite values");
  }
  return l;
}

History AcousticProblem::solve_forward(const Vec& x, std::size_t source) const {
  check_param(x);
  if (source >= cfg_.sources.size()) throw std::invalid_argument("acoustic: source index out of range");
  const Operators op = operators(coefficients(x));
  const auto& src = cfg_.sources[source];
  const Vec& prof = profiles_[source];
  const double dt = cfg_.dt();
  return sweep_forward(op, [&](int k) -> Vec { return ricker(k * dt, src.f0, src.t0) * prof; });
}

Eigen::MatrixXd AcousticProblem::traces(const History& u) const {
  Eigen::MatrixXd tr(b_.rows(), static_cast<Eigen::Index>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) tr.col(static_cast<Eigen::Index>(k)) = b_ * u[k];
  return tr;
}

SeismicRecord AcousticProblem::clean_record(const Vec& x) const {
  SeismicRecord rec;
  for (std::size_t s = 0; s < cfg_.sources.size(); ++s) rec.traces.push_back(traces(solve_forward(x, s)));
  return rec;
}

namespace {

double time_weight(int k, int steps) { return (k == 0 || k == steps) ? 0.5 : 1.0; }

}  // namespace

double AcousticProblem::misfit_value(const Vec& x, const SeismicRecord& data) const {
  check_record(data);
  const double ns = static_cast<double>(cfg_.sources.size());
  const double dt = cfg_.dt();
  double j = 0.0;
  for (std::size_t s = 0; s < cfg_.sources.size(); ++s) {
    const Eigen::MatrixXd res = traces(solve_forward(x, s)) - data.traces[s];
    for (int k = 0; k <= cfg_.steps; ++k) j += time_weight(k, cfg_.steps) * dt * res.col(k).squaredNorm();
  }
  return j / (2.0 * ns);
}

Vec AcousticProblem::residual_weighted(const Eigen::MatrixXd& res, int k) const {
  const double ns = static_cast<double>(cfg_.sources.size());
  return (time_weight(k, cfg_.steps) * cfg_.dt() / ns) * (b_.transpose() * res.col(k));
}

Vec AcousticProblem::sensitivity(const Coefs& c, const History& l, const History& u) const {
  const int steps = cfg_.steps;
  const double dt = cfg_.dt();
  const auto nd = static_cast<Eigen::Index>(state_->num_dofs());
  const auto n = static_cast<Eigen::Index>(param_->num_dofs());
  const auto nt = lumped_.size();
  Vec acc_m = Vec::Zero(nd), acc_c = Vec::Zero(nd), acc_k = Vec::Zero(static_cast<Eigen::Index>(nt));
  const Vec zero = Vec::Zero(nd);
  Eigen::Matrix<double, 6, 1> le, ue;
  for (int k = 0; k < steps; ++k) {
    const Vec& lam = l[k + 1];
    const Vec& up = u[k + 1];
    const Vec& uk = u[k];
    const Vec& um = k > 0 ? u[k - 1] : zero;
    acc_m += lam.cwiseProduct(up - 2.0 * uk + um) / (dt * dt);
    acc_c += lam.cwiseProduct(up - um) / (2 * dt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& dofs = state_->cell_dofs(t);
      for (int i = 0; i < 6; ++i) {
        le[i] = lam[dofs[i]];
        ue[i] = uk[dofs[i]];
      }
      acc_k[static_cast<Eigen::Index>(t)] += le.dot(local_k_[t] * ue);
    }
  }
  Vec per_m(static_cast<Eigen::Index>(nt));
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& dofs = state_->cell_dofs(t);
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += lumped_[t][i] * acc_m[dofs[i]];
    per_m[static_cast<Eigen::Index>(t)] = s;
  }
  Vec g(2 * n);
  g.head(n) = scatter_centroid(*param_, per_m);
  g.tail(n) = scatter_centroid(*param_, acc_k);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    double q = 0.0;
    for (int i = 0; i < 3; ++i) q += edges_[e].weights[i] * acc_c[edges_[e].dofs[i]];
    const double a = c.alpha_e[ei], b = c.beta_e[ei];
    const double ca = 0.5 * std::sqrt(b / a), cb = 0.5 * std::sqrt(a / b);
    for (int v : edges_[e].vertices) {
      g[v] += 0.5 * q * ca;
      g[n + v] += 0.5 * q * cb;
    }
  }
  return g;
}

Vec AcousticProblem::absorbing_second(const Coefs& c, const Vec& dir, const History& l, const History& u) const {
  const int steps = cfg_.steps;
  const double dt = cfg_.dt();
  const auto nd = static_cast<Eigen::Index>(state_->num_dofs());
  const auto n = static_cast<Eigen::Index>(param_->num_dofs());
  Vec acc_c = Vec::Zero(nd);
  const Vec zero = Vec::Zero(nd);
  for (int k = 0; k < steps; ++k) {
    const Vec& um = k > 0 ? u[k - 1] : zero;
    acc_c += l[k + 1].cwiseProduct(u[k + 1] - um) / (2 * dt);
  }
  const Coefs d = coefficients(dir);
  Vec g = Vec::Zero(2 * n);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    double q = 0.0;
    for (int i = 0; i < 3; ++i) q += edges_[e].weights[i] * acc_c[edges_[e].dofs[i]];
    const double a = c.alpha_e[ei], b = c.beta_e[ei];
    const double caa = -0.25 * std::sqrt(b) * std::pow(a, -1.5);
    const double cbb = -0.25 * std::sqrt(a) * std::pow(b, -1.5);
    const double cab = 0.25 / std::sqrt(a * b);
    const double da = d.alpha_e[ei], db = d.beta_e[ei];
    for (int v : edges_[e].vertices) {
      g[v] += 0.5 * q * (caa * da + cab * db);
      g[n + v] += 0.5 * q * (cab * da + cbb * db);
    }
  }
  return g;
}

AcousticLinearization AcousticProblem::linearize(const Vec& x, const SeismicRecord& data) const {
  check_param(x);
  check_record(data);
  AcousticLinearization lin;
  lin.prob_ = this;
  lin.x_ = x;
  const Coefs c = coefficients(x);
  const Operators op = operators(c);
  const double dt = cfg_.dt();
  const double ns = static_cast<double>(cfg_.sources.size());
  lin.grad_ = Vec::Zero(static_cast<Eigen::Index>(param_dim()));
  for (std::size_t s = 0; s < cfg_.sources.size(); ++s) {
    const auto& src = cfg_.sources[s];
    const Vec& prof = profiles_[s];
    History u = sweep_forward(op, [&](int k) -> Vec { return ricker(k * dt, src.f0, src.t0) * prof; });
    const Eigen::MatrixXd res = traces(u) - data.traces[s];
    for (int k = 0; k <= cfg_.steps; ++k)
      lin.misfit_ += time_weight(k, cfg_.steps) * dt * res.col(k).squaredNorm() / (2.0 * ns);
    History l = sweep_backward(op, [&](int j) -> Vec { return -residual_weighted(res, j); });
    lin.grad_ += sensitivity(c, l, u);
    lin.u_.push_back(std::move(u));
    lin.lambda_.push_back(std::move(l));
  }
  return lin;
}

Vec AcousticLinearization::hvp(const Vec& dir, HessianMode mode) const {
  const AcousticProblem& pb = *prob_;
  if (static_cast<std::size_t>(dir.size()) != pb.param_dim())
    throw std::invalid_argument("acoustic hvp: direction size mismatch");
  const auto c = pb.coefficients(x_);
  const auto op = pb.operators(c);
  const auto dop = pb.perturbation(c, dir);
  const int steps = pb.cfg_.steps;
  const double dt = pb.cfg_.dt();
  const auto nd = static_cast<Eigen::Index>(pb.state_->num_dofs());
  const Vec zero = Vec::Zero(nd);
  const Vec dm2 = 2.0 * dop.m / (dt * dt);
  const Vec dmc = dop.m / (dt * dt) - dop.c / (2 * dt);
  Vec h = Vec::Zero(dir.size());
  for (std::size_t s = 0; s < u_.size(); ++s) {
    const History& u = u_[s];
    const History& l = lambda_[s];
    const History uh = pb.sweep_forward(op, [&](int k) -> Vec {
      const Vec& um = k > 0 ? u[k - 1] : zero;
      return -(dop.m.cwiseProduct(u[k + 1] - 2.0 * u[k] + um) / (dt * dt) +
               dop.c.cwiseProduct(u[k + 1] - um) / (2 * dt) + dop.k * u[k]);
    });
    const Eigen::MatrixXd bu = pb.traces(uh);
    const History lh = pb.sweep_backward(op, [&](int j) -> Vec {
      Vec r = -pb.residual_weighted(bu, j);
      if (mode == HessianMode::full) {
        const Vec& l1 = j + 1 <= steps ? l[j + 1] : zero;
        const Vec& l2 = j + 2 <= steps ? l[j + 2] : zero;
        r -= dop.a.cwiseProduct(l[j]) + dop.k * l1 - dm2.cwiseProduct(l1) + dmc.cwiseProduct(l2);
      }
      return r;
    });
    h += pb.sensitivity(c, lh, u);
    if (mode == HessianMode::full) h += pb.sensitivity(c, l, uh) + pb.absorbing_second(c, dir, l, u);
  }
  return h;
}

Vec AcousticProblem::misfit_gradient(const Vec& x, const SeismicRecord& data) const {
  return linearize(x, data).gradient();
}

Vec AcousticProblem::misfit_hvp(const Vec& x, const SeismicRecord& data, const Vec& dir, HessianMode mode) const {
  return linearize(x, data).hvp(dir, mode);
}

SeismicRecord AcousticProblem::synthesize_records(const Vec& x_true, double snr_db, std::uint64_t seed) const {
  if (std::isnan(snr_db)) throw std::invalid_argument("synthesize_records: snr_db is NaN");
  SeismicRecord rec = clean_record(x_true);
  rec.snr_db = snr_db;
  rec.seed = seed;
  if (std::isinf(snr_db) && snr_db > 0) return rec;
  double ss = 0.0;
  Eigen::Index count = 0;
  for (const auto& t : rec.traces) {
    ss += t.squaredNorm();
    count += t.size();
  }
  const double sigma = std::sqrt(ss / static_cast<double>(count)) * std::pow(10.0, -snr_db / 20.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sigma);
  for (auto& t : rec.traces)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) += nd(rng);
  return rec;
}

std::vector<double> AcousticProblem::energy(const Vec& x, const History& u) const {
  const Operators op = operators(coefficients(x));
  const double dt = cfg_.dt();
  std::vector<double> e;
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    const Vec du = u[k + 1] - u[k];
    e.push_back(0.5 * du.dot(op.m.cwiseProduct(du)) / (dt * dt) + 0.5 * u[k + 1].dot(op.k * u[k]));
  }
  return e;
}

}  // namespace jinv
