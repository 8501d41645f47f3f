#include "jinv/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "jinv/acoustic_model.hpp"
#include "jinv/mesh.hpp"
#include "jinv/poisson_model.hpp"
#include "jinv/regularizers.hpp"

namespace jinv {

namespace {

constexpr double kSteps[] = {1e-4, 1e-5, 1e-6, 1e-7};

double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

double rel(const Vec& a, const Vec& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

Vec normal(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

std::vector<Point> lattice(int n, double lo, double hi) {
  std::vector<Point> pts;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pts.emplace_back(lo + (hi - lo) * (i + 0.5) / n, lo + (hi - lo) * (j + 0.5) / n);
  return pts;
}

}  // namespace

double fd_gradient_error(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& d, double exact) {
  double best = 1e300;
  for (double h : kSteps) best = std::min(best, rel((f(x + h * d) - f(x - h * d)) / (2 * h), exact));
  return best;
}

double fd_hessian_error(const std::function<Vec(const Vec&)>& g, const Vec& x, const Vec& d, const Vec& exact) {
  double best = 1e300;
  for (double h : kSteps) best = std::min(best, rel(Vec((g(x + h * d) - g(x - h * d)) / (2 * h)), exact));
  return best;
}

double symmetry_error(const std::function<Vec(const Vec&)>& hvp, const Vec& p, const Vec& q) {
  return rel(q.dot(hvp(p)), p.dot(hvp(q)));
}

std::vector<CheckResult> check_regularizers(int n, std::uint64_t seed) {
  auto p1 = build_space(build_mesh(n), 1);
  const auto dim = static_cast<Eigen::Index>(2 * p1->num_dofs());
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  for (RegKind kind : {RegKind::tv_independent, RegKind::cross_gradient, RegKind::normalized_cross_gradient,
                       RegKind::vtv, RegKind::nuclear}) {
    RegConfig c;
    c.kind = kind;
    if (kind == RegKind::vtv || kind == RegKind::nuclear) {
      c.gamma = 0.8;
      c.eps_joint = 1e-2;
    } else {
      c.gamma1 = 1.3;
      c.gamma2 = 0.7;
      c.eps_tv = 1e-2;
      if (kind != RegKind::tv_independent) {
        c.gamma = 0.9;
        c.eps_joint = 1e-2;
      }
    }
    const JointRegularizer reg = joint_reg_build(c, p1);
    const std::string name(to_string(kind));
    const Vec x = normal(dim, rng), d = normal(dim, rng), q = normal(dim, rng);
    const Vec g = reg.value_grad(x).gradient;
    out.push_back({name + " gradient", fd_gradient_error([&](const Vec& v) { return reg.value(v); }, x, d, g.dot(d)),
                   1e-5});
    if (!reg.has_hessian()) continue;
    auto hvp = [&](const Vec& p) { return reg.hessian_apply(x, p); };
    out.push_back({name + " hessian", fd_hessian_error([&](const Vec& v) { return reg.value_grad(v).gradient; }, x,
                                                       d, hvp(d)),
                   1e-4});
    out.push_back({name + " symmetry", symmetry_error(hvp, d, q), 1e-10});
  }
  return out;
}

std::vector<CheckResult> check_poisson(int n, std::uint64_t seed) {
  const PoissonProblem pb(build_mesh(n), lattice(6, 0.05, 0.95));
  std::mt19937_64 rng(seed);
  const auto dim = static_cast<Eigen::Index>(pb.param_space().num_dofs());
  const Vec clean = pb.observation() * pb.solve_state(normal(dim, rng, 0.5));
  const Vec data = clean + normal(clean.size(), rng, 0.05);
  const Vec m = normal(dim, rng, 0.5), d = normal(dim, rng), q = normal(dim, rng);
  const auto lin = pb.linearize(m, data);
  auto hvp = [&](const Vec& p) { return lin.hvp(p, HessianMode::full); };
  return {
      {"poisson gradient",
       fd_gradient_error([&](const Vec& v) { return pb.misfit_value(v, data); }, m, d, lin.gradient().dot(d)), 1e-5},
      {"poisson hessian", fd_hessian_error([&](const Vec& v) { return pb.misfit_gradient(v, data); }, m, d, hvp(d)),
       1e-4},
      {"poisson symmetry", symmetry_error(hvp, d, q), 1e-9},
  };
}

std::vector<CheckResult> check_acoustic(int n, std::uint64_t seed) {
  auto mesh = build_mesh(n);
  std::vector<Point> receivers;
  for (int i = 0; i < 6; ++i) receivers.emplace_back((i + 0.5) / 6, 0.9);
  const AcousticProblem pb(mesh, make_wave_config(*mesh, 1.5, 1.5, kDefaultCfl,
                                                  {{Point(0.3, 0.8)}, {Point(0.7, 0.8)}}, receivers));
  // alpha, beta near 1 with smooth bumps
  auto medium = [&](double amp) {
    const auto& xs = pb.param_space().dof_coordinates();
    const auto k = static_cast<Eigen::Index>(xs.size());
    Vec x(2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Point& p = xs[static_cast<std::size_t>(i)];
      x[i] = 1.0 + amp * std::sin(std::numbers::pi * p.x()) * p.y();
      x[k + i] = 1.0 + amp * std::cos(2.0 * p.x() * p.y());
    }
    return x;
  };
  std::mt19937_64 rng(seed);
  const SeismicRecord data = pb.synthesize_records(medium(0.2), 20.0, seed);
  const Vec x = medium(0.05);
  const auto k = x.size() / 2;
  const auto lin = pb.linearize(x, data);
  auto f = [&](const Vec& v) { return pb.misfit_value(v, data); };
  Vec da = Vec::Zero(2 * k), db = Vec::Zero(2 * k);
  da.head(k) = normal(k, rng, 0.1);
  db.tail(k) = normal(k, rng, 0.1);
  const Vec p = normal(2 * k, rng, 0.1), q = normal(2 * k, rng, 0.1);
  auto hvp = [&](const Vec& v) { return lin.hvp(v, HessianMode::full); };
  return {
      {"acoustic gradient alpha", fd_gradient_error(f, x, da, lin.gradient().dot(da)), 1e-4},
      {"acoustic gradient beta", fd_gradient_error(f, x, db, lin.gradient().dot(db)), 1e-4},
      {"acoustic hessian", fd_hessian_error([&](const Vec& v) { return pb.misfit_gradient(v, data); }, x, p, hvp(p)),
       1e-3},
      {"acoustic symmetry", symmetry_error(hvp, p, q), 1e-8},
  };
}

std::vector<CheckResult> run_fd_checks(std::uint64_t seed) {
  auto out = check_regularizers(8, seed);
  for (auto&& part : {check_poisson(8, seed + 1), check_acoustic(10, seed + 2)})
    out.insert(out.end(), part.begin(), part.end());
  return out;
}

}  // namespace jinv
