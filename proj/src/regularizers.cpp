#include "jinv/regularizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jinv/errors.hpp"
#include "jinv/fem.hpp"

namespace jinv {

namespace {

template <int D>
struct Local {
  double f = 0.0;
  Eigen::Matrix<double, D, 1> df;
  Eigen::Matrix<double, D, D> d2f;
};

// Per-element data for D/2 stacked P1 fields: g = B * x_local.
template <int D>
struct Element {
  static constexpr int L = 3 * (D / 2);
  double area;
  Eigen::Matrix<double, D, L> b;
  std::array<int, L> dofs;
};

template <int D, class Visit>
void for_each_element(const FunctionSpace& p1, const Vec& x, Visit&& visit) {
  constexpr int F = D / 2;
  if (p1.order() != 1) throw std::invalid_argument("regularizer: parameter space must be order 1");
  const auto n = static_cast<Eigen::Index>(p1.num_dofs());
  if (x.size() != F * n)
    throw std::invalid_argument("regularizer: expected vector of length " + std::to_string(F * n) +
                                ", got " + std::to_string(x.size()));
  const auto& mesh = p1.mesh();
  Element<D> el;
  el.b.setZero();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto gl = mesh.barycentric_gradients(t);
    el.area = mesh.triangle_area(t);
    Eigen::Matrix<double, D, 1> g;
    for (int k = 0; k < F; ++k) {
      el.b.template block<2, 3>(2 * k, 3 * k) = gl;
      for (int j = 0; j < 3; ++j) el.dofs[3 * k + j] = static_cast<int>(k * n + tri[j]);
      g.template segment<2>(2 * k) = gl.col(0) * x[k * n + tri[0]] + gl.col(1) * x[k * n + tri[1]] +
                                     gl.col(2) * x[k * n + tri[2]];
    }
    visit(el, g);
  }
}

template <int D, class Fn>
ValueGrad value_grad(const FunctionSpace& p1, const Vec& x, Fn&& f) {
  ValueGrad out;
  out.gradient = Vec::Zero(x.size());
  for_each_element<D>(p1, x, [&](const Element<D>& el, const Eigen::Matrix<double, D, 1>& g) {
    const Local<D> loc = f(g, false);
    out.value += el.area * loc.f;
    const Eigen::Matrix<double, Element<D>::L, 1> ge = el.area * (el.b.transpose() * loc.df);
    for (int a = 0; a < Element<D>::L; ++a) out.gradient[el.dofs[a]] += ge[a];
  });
  return out;
}

template <int D>
void keep_block_diagonal(Eigen::Matrix<double, D, D>& h) {
  if constexpr (D == 4) {
    h.template block<2, 2>(0, 2).setZero();
    h.template block<2, 2>(2, 0).setZero();
  }
}

template <int D, class Fn>
Vec hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir, Fn&& f) {
  if (dir.size() != x.size()) throw std::invalid_argument("regularizer: direction size mismatch");
  Vec out = Vec::Zero(x.size());
  for_each_element<D>(p1, x, [&](const Element<D>& el, const Eigen::Matrix<double, D, 1>& g) {
    const Local<D> loc = f(g, true);
    Eigen::Matrix<double, Element<D>::L, 1> de;
    for (int a = 0; a < Element<D>::L; ++a) de[a] = dir[el.dofs[a]];
    const Eigen::Matrix<double, Element<D>::L, 1> he =
        el.area * (el.b.transpose() * (loc.d2f * (el.b * de)));
    for (int a = 0; a < Element<D>::L; ++a) out[el.dofs[a]] += he[a];
  });
  return out;
}

template <int D, class Fn>
SparseMatrix hessian_matrix(const FunctionSpace& p1, const Vec& x, bool block_diagonal, Fn&& f) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(p1.mesh().num_triangles() * Element<D>::L * Element<D>::L);
  for_each_element<D>(p1, x, [&](const Element<D>& el, const Eigen::Matrix<double, D, 1>& g) {
    Local<D> loc = f(g, true);
    if (block_diagonal) keep_block_diagonal<D>(loc.d2f);
    const Eigen::Matrix<double, Element<D>::L, Element<D>::L> he =
        el.area * (el.b.transpose() * loc.d2f * el.b);
    for (int a = 0; a < Element<D>::L; ++a)
      for (int c = 0; c < Element<D>::L; ++c)
        if (he(a, c) != 0.0) trip.emplace_back(el.dofs[a], el.dofs[c], he(a, c));
  });
  SparseMatrix h(x.size(), x.size());
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

void require_positive_eps(double eps, const char* who) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw std::invalid_argument(std::string(who) + ": eps must be positive");
}

// sqrt(|g|^2 + eps), scaled by gamma. Used for TV (D = 2) and VTV (D = 4).
template <int D>
auto smoothed_norm(double eps, double gamma) {
  return [eps, gamma](const Eigen::Matrix<double, D, 1>& g, bool need_h) {
    Local<D> r;
    const double s = std::sqrt(g.squaredNorm() + eps);
    r.f = gamma * s;
    r.df = (gamma / s) * g;
    if (need_h)
      r.d2f = (gamma / s) * Eigen::Matrix<double, D, D>::Identity() - (gamma / (s * s * s)) * g * g.transpose();
    return r;
  };
}

Local<4> cross_gradient_local(const Eigen::Vector4d& g, bool need_h) {
  const Eigen::Vector2d g1 = g.head<2>(), g2 = g.tail<2>();
  const double a = g1.squaredNorm(), b = g2.squaredNorm(), c = g1.dot(g2);
  Local<4> r;
  r.f = 0.5 * (a * b - c * c);
  r.df << b * g1 - c * g2, a * g2 - c * g1;
  if (need_h) {
    const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d off = 2 * g1 * g2.transpose() - c * id - g2 * g1.transpose();
    r.d2f << b * id - g2 * g2.transpose(), off, off.transpose(), a * id - g1 * g1.transpose();
  }
  return r;
}

auto normalized_cross_gradient_local(double eps) {
  return [eps](const Eigen::Vector4d& g, bool need_h) {
    const Eigen::Vector2d g1 = g.head<2>(), g2 = g.tail<2>();
    const double a = g1.squaredNorm() + eps, b = g2.squaredNorm() + eps, c = g1.dot(g2);
    const double q = c * c / (a * b);
    Local<4> r;
    r.f = 0.5 * (1.0 - q);
    // f = (1 - q)/2 with q = c^2 / (a b); derivatives of q below.
    const double k = 2.0 * c / (a * b);
    r.df << -0.5 * k * (g2 - (c / a) * g1), -0.5 * k * (g1 - (c / b) * g2);
    if (need_h) {
      const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
      auto diag_block = [&](const Eigen::Vector2d& u, const Eigen::Vector2d& w, double au, double bw) {
        return Eigen::Matrix2d(2.0 / (au * bw) * w * w.transpose() -
                               4.0 * c / (au * au * bw) * (w * u.transpose() + u * w.transpose()) +
                               8.0 * c * c / (au * au * au * bw) * u * u.transpose() -
                               2.0 * c * c / (au * au * bw) * id);
      };
      const Eigen::Matrix2d h11 = diag_block(g1, g2, a, b);
      const Eigen::Matrix2d h22 = diag_block(g2, g1, b, a);
      const Eigen::Matrix2d h12 = 2.0 * c / (a * b) * id + 2.0 / (a * b) * g2 * g1.transpose() -
                                  4.0 * c / (a * b * b) * g2 * g2.transpose() -
                                  4.0 * c / (a * a * b) * g1 * g1.transpose() +
                                  4.0 * c * c / (a * a * b * b) * g1 * g2.transpose();
      r.d2f << h11, h12, h12.transpose(), h22;
      r.d2f *= -0.5;
    }
    return r;
  };
}

auto nuclear_local(double eps, double gamma) {
  return [eps, gamma](const Eigen::Vector4d& g, bool need_h) {
    if (need_h) throw std::logic_error("nuclear norm: Hessian not available");
    Eigen::Matrix2d gm;
    gm.col(0) = g.head<2>();
    gm.col(1) = g.tail<2>();
    const Svd2 s = svd2x2(gm);
    Local<4> r;
    const double r1 = std::sqrt(s.sigma[0] * s.sigma[0] + eps);
    const double r2 = std::sqrt(s.sigma[1] * s.sigma[1] + eps);
    r.f = gamma * (r1 + r2);
    const Eigen::Matrix2d dg =
        gamma * s.u * Eigen::Vector2d(s.sigma[0] / r1, s.sigma[1] / r2).asDiagonal() * s.v.transpose();
    r.df << dg.col(0), dg.col(1);
    return r;
  };
}

SparseMatrix block_diag(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < b.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(b, k); it; ++it)
      trip.emplace_back(a.rows() + it.row(), a.cols() + it.col(), it.value());
  SparseMatrix m(a.rows() + b.rows(), a.cols() + b.cols());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

std::string_view to_string(RegKind k) {
  switch (k) {
    case RegKind::tv_independent: return "tv_independent";
    case RegKind::cross_gradient: return "cross_gradient";
    case RegKind::normalized_cross_gradient: return "normalized_cross_gradient";
    case RegKind::vtv: return "vtv";
    case RegKind::nuclear: return "nuclear";
  }
  return "unknown";
}

RegKind parse_reg_kind(std::string_view name) {
  if (name == "tv_independent" || name == "tv") return RegKind::tv_independent;
  if (name == "cross_gradient" || name == "cg") return RegKind::cross_gradient;
  if (name == "normalized_cross_gradient" || name == "ncg") return RegKind::normalized_cross_gradient;
  if (name == "vtv") return RegKind::vtv;
  if (name == "nuclear" || name == "nn") return RegKind::nuclear;
  throw ConfigError("unknown regularizer kind '" + std::string(name) + "'");
}

void RegConfig::validate() const {
  const std::string who = "reg (" + std::string(to_string(kind)) + "): ";
  auto need = [&](const std::optional<double>& v, const char* key, bool positive) {
    if (!v) throw ConfigError(who + "missing " + key);
    if (!std::isfinite(*v) || *v < 0.0 || (positive && *v == 0.0))
      throw ConfigError(who + key + (positive ? " must be positive" : " must be nonnegative"));
  };
  auto forbid = [&](const std::optional<double>& v, const char* key, bool zero_ok) {
    if (v && !(zero_ok && *v == 0.0)) throw ConfigError(who + key + " is not a hyperparameter of this kind");
  };
  switch (kind) {
    case RegKind::cross_gradient:
    case RegKind::normalized_cross_gradient:
      need(gamma1, "gamma1", false);
      need(gamma2, "gamma2", false);
      need(gamma, "gamma", false);
      need(eps_tv, "eps_tv", true);
      need(eps_joint, "eps_joint", true);
      break;
    case RegKind::vtv:
    case RegKind::nuclear:
      need(gamma, "gamma", true);
      need(eps_joint, "eps_joint", true);
      forbid(gamma1, "gamma1", true);
      forbid(gamma2, "gamma2", true);
      forbid(eps_tv, "eps_tv", false);
      break;
    case RegKind::tv_independent:
      need(gamma1, "gamma1", false);
      need(gamma2, "gamma2", false);
      need(eps_tv, "eps_tv", true);
      forbid(gamma, "gamma", true);
      forbid(eps_joint, "eps_joint", false);
      break;
  }
  if (precond_shift && !(std::isfinite(*precond_shift) && *precond_shift >= 0.0))
    throw ConfigError(who + "precond_shift must be nonnegative");
}

double RegConfig::shift() const {
  if (precond_shift) return *precond_shift;
  const double scale = std::max({gamma1.value_or(0.0), gamma2.value_or(0.0), gamma.value_or(0.0)});
  return 1e-8 * (scale > 0.0 ? scale : 1.0);
}

Vec stack_pair(const Vec& m1, const Vec& m2) {
  if (m1.size() != m2.size()) throw std::invalid_argument("stack_pair: size mismatch");
  Vec x(m1.size() + m2.size());
  x << m1, m2;
  return x;
}

Svd2 svd2x2(const Eigen::Matrix2d& g) {
  if (!g.allFinite()) throw std::invalid_argument("svd2x2: nonfinite entries");
  // G = R(phi) diag(sx, sy) R(theta), R = rotation.
  const double e = 0.5 * (g(0, 0) + g(1, 1)), f = 0.5 * (g(0, 0) - g(1, 1));
  const double gg = 0.5 * (g(1, 0) + g(0, 1)), h = 0.5 * (g(1, 0) - g(0, 1));
  const double q = std::hypot(e, h), r = std::hypot(f, gg);
  const double sx = q + r, sy = q - r;
  const double a1 = std::atan2(gg, f), a2 = std::atan2(h, e);
  const double theta = 0.5 * (a2 - a1), phi = 0.5 * (a2 + a1);
  auto rot = [](double t) {
    Eigen::Matrix2d m;
    m << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return m;
  };
  Svd2 s;
  s.u = rot(phi);
  s.v = rot(theta).transpose();
  s.sigma << sx, std::abs(sy);
  if (sy < 0) s.u.col(1) = -s.u.col(1);
  return s;
}

ValueGrad tv_value_grad(const FunctionSpace& p1, const Vec& m, double eps, double gamma) {
  require_positive_eps(eps, "tv");
  return value_grad<2>(p1, m, smoothed_norm<2>(eps, gamma));
}

Vec tv_hessian_apply(const FunctionSpace& p1, const Vec& m, const Vec& dir, double eps, double gamma) {
  require_positive_eps(eps, "tv");
  return hessian_apply<2>(p1, m, dir, smoothed_norm<2>(eps, gamma));
}

SparseMatrix tv_hessian_matrix(const FunctionSpace& p1, const Vec& m, double eps, double gamma) {
  require_positive_eps(eps, "tv");
  return hessian_matrix<2>(p1, m, false, smoothed_norm<2>(eps, gamma));
}

ValueGrad cg_value_grad(const FunctionSpace& p1, const Vec& x) {
  return value_grad<4>(p1, x, cross_gradient_local);
}

Vec cg_hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir) {
  return hessian_apply<4>(p1, x, dir, cross_gradient_local);
}

SparseMatrix cg_hessian_matrix(const FunctionSpace& p1, const Vec& x, bool block_diagonal) {
  return hessian_matrix<4>(p1, x, block_diagonal, cross_gradient_local);
}

ValueGrad ncg_value_grad(const FunctionSpace& p1, const Vec& x, double eps) {
  require_positive_eps(eps, "ncg");
  return value_grad<4>(p1, x, normalized_cross_gradient_local(eps));
}

Vec ncg_hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir, double eps) {
  require_positive_eps(eps, "ncg");
  return hessian_apply<4>(p1, x, dir, normalized_cross_gradient_local(eps));
}

SparseMatrix ncg_hessian_matrix(const FunctionSpace& p1, const Vec& x, double eps, bool block_diagonal) {
  require_positive_eps(eps, "ncg");
  return hessian_matrix<4>(p1, x, block_diagonal, normalized_cross_gradient_local(eps));
}

ValueGrad vtv_value_grad(const FunctionSpace& p1, const Vec& x, double eps, double gamma) {
  require_positive_eps(eps, "vtv");
  return value_grad<4>(p1, x, smoothed_norm<4>(eps, gamma));
}

Vec vtv_hessian_apply(const FunctionSpace& p1, const Vec& x, const Vec& dir, double eps, double gamma) {
  require_positive_eps(eps, "vtv");
  return hessian_apply<4>(p1, x, dir, smoothed_norm<4>(eps, gamma));
}

SparseMatrix vtv_hessian_matrix(const FunctionSpace& p1, const Vec& x, double eps, double gamma) {
  require_positive_eps(eps, "vtv");
  return hessian_matrix<4>(p1, x, false, smoothed_norm<4>(eps, gamma));
}

ValueGrad nn_value_grad(const FunctionSpace& p1, const Vec& x, double eps, double gamma) {
  require_positive_eps(eps, "nuclear");
  return value_grad<4>(p1, x, nuclear_local(eps, gamma));
}

JointRegularizer::JointRegularizer(RegConfig config, std::shared_ptr<const FunctionSpace> p1)
    : cfg_(std::move(config)), space_(std::move(p1)) {
  if (!space_ || space_->order() != 1)
    throw std::invalid_argument("JointRegularizer: parameter space must be order 1");
  cfg_.validate();
  const SparseMatrix m = assemble_mass(*space_);
  mass2_ = block_diag(m, m);
}

ValueGrad JointRegularizer::value_grad(const Vec& x) const {
  const auto& sp = *space_;
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  if (x.size() != 2 * n) throw std::invalid_argument("JointRegularizer: size mismatch");
  ValueGrad out;
  out.gradient = Vec::Zero(2 * n);
  auto add = [&](const ValueGrad& vg, double w) {
    out.value += w * vg.value;
    out.gradient += w * vg.gradient;
  };
  auto add_tv = [&]() {
    const double e = *cfg_.eps_tv;
    const auto t1 = tv_value_grad(sp, x.head(n), e, *cfg_.gamma1);
    const auto t2 = tv_value_grad(sp, x.tail(n), e, *cfg_.gamma2);
    out.value += t1.value + t2.value;
    out.gradient.head(n) += t1.gradient;
    out.gradient.tail(n) += t2.gradient;
  };
  switch (cfg_.kind) {
    case RegKind::tv_independent:
      add_tv();
      break;
    case RegKind::cross_gradient:
      add_tv();
      if (*cfg_.gamma != 0.0) add(cg_value_grad(sp, x), *cfg_.gamma);
      break;
    case RegKind::normalized_cross_gradient:
      add_tv();
      if (*cfg_.gamma != 0.0) add(ncg_value_grad(sp, x, *cfg_.eps_joint), *cfg_.gamma);
      break;
    case RegKind::vtv:
      add(vtv_value_grad(sp, x, *cfg_.eps_joint, *cfg_.gamma), 1.0);
      break;
    case RegKind::nuclear:
      add(nn_value_grad(sp, x, *cfg_.eps_joint, *cfg_.gamma), 1.0);
      break;
  }
  return out;
}

Vec JointRegularizer::hessian_apply(const Vec& x, const Vec& dir) const {
  if (!has_hessian()) throw std::logic_error("JointRegularizer: nuclear norm has no Hessian");
  const auto& sp = *space_;
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  if (x.size() != 2 * n || dir.size() != 2 * n)
    throw std::invalid_argument("JointRegularizer: size mismatch");
  Vec out = Vec::Zero(2 * n);
  auto add_tv = [&]() {
    const double e = *cfg_.eps_tv;
    out.head(n) += tv_hessian_apply(sp, x.head(n), dir.head(n), e, *cfg_.gamma1);
    out.tail(n) += tv_hessian_apply(sp, x.tail(n), dir.tail(n), e, *cfg_.gamma2);
  };
  switch (cfg_.kind) {
    case RegKind::tv_independent:
      add_tv();
      break;
    case RegKind::cross_gradient:
      add_tv();
      if (*cfg_.gamma != 0.0) out += *cfg_.gamma * cg_hessian_apply(sp, x, dir);
      break;
    case RegKind::normalized_cross_gradient:
      add_tv();
      if (*cfg_.gamma != 0.0) out += *cfg_.gamma * ncg_hessian_apply(sp, x, dir, *cfg_.eps_joint);
      break;
    case RegKind::vtv:
      out += vtv_hessian_apply(sp, x, dir, *cfg_.eps_joint, *cfg_.gamma);
      break;
    case RegKind::nuclear:
      break;
  }
  return out;
}

SparseMatrix JointRegularizer::hessian_matrix(const Vec& x) const {
  if (!has_hessian()) throw std::logic_error("JointRegularizer: nuclear norm has no Hessian");
  const auto& sp = *space_;
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  if (x.size() != 2 * n) throw std::invalid_argument("JointRegularizer: size mismatch");
  if (cfg_.kind == RegKind::vtv) return vtv_hessian_matrix(sp, x, *cfg_.eps_joint, *cfg_.gamma);
  const double e = *cfg_.eps_tv;
  SparseMatrix h = block_diag(tv_hessian_matrix(sp, x.head(n), e, *cfg_.gamma1),
                              tv_hessian_matrix(sp, x.tail(n), e, *cfg_.gamma2));
  if (cfg_.kind == RegKind::cross_gradient && *cfg_.gamma != 0.0)
    h += *cfg_.gamma * cg_hessian_matrix(sp, x);
  if (cfg_.kind == RegKind::normalized_cross_gradient && *cfg_.gamma != 0.0)
    h += *cfg_.gamma * ncg_hessian_matrix(sp, x, *cfg_.eps_joint);
  return h;
}

SparseMatrix JointRegularizer::preconditioner_matrix(const Vec& x) const {
  const auto& sp = *space_;
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  if (x.size() != 2 * n) throw std::invalid_argument("JointRegularizer: size mismatch");
  const double delta = cfg_.shift();
  if (!(delta > 0.0))
    throw std::invalid_argument("JointRegularizer: preconditioner needs a positive shift (constants are in the kernel)");
  SparseMatrix p;
  if (cfg_.kind == RegKind::vtv || cfg_.kind == RegKind::nuclear) {
    p = vtv_hessian_matrix(sp, x, *cfg_.eps_joint, *cfg_.gamma);
  } else {
    const double e = *cfg_.eps_tv;
    p = block_diag(tv_hessian_matrix(sp, x.head(n), e, *cfg_.gamma1),
                   tv_hessian_matrix(sp, x.tail(n), e, *cfg_.gamma2));
    if (cfg_.kind == RegKind::cross_gradient && *cfg_.gamma != 0.0)
      p += *cfg_.gamma * cg_hessian_matrix(sp, x, true);
  }
  p += delta * mass2_;
  return p;
}

std::function<Vec(const Vec&)> JointRegularizer::preconditioner(const Vec& x) const {
  return cholesky_inverse(preconditioner_matrix(x));
}

JointRegularizer joint_reg_build(const RegConfig& config, std::shared_ptr<const FunctionSpace> p1) {
  return JointRegularizer(config, std::move(p1));
}

double negative_fraction(const std::vector<double>& ev, double rel_tol) {
  if (ev.empty()) return 0.0;
  double amax = 0.0;
  for (double v : ev) amax = std::max(amax, std::abs(v));
  const auto neg = std::count_if(ev.begin(), ev.end(), [&](double v) { return v < -rel_tol * amax; });
  return static_cast<double>(neg) / static_cast<double>(ev.size());
}

Spectrum reg_hessian_spectrum(RegKind kind, const FunctionSpace& p1, const Vec& x, double eps) {
  const auto n = static_cast<Eigen::Index>(p1.num_dofs());
  if (x.size() != 2 * n) throw std::invalid_argument("reg_hessian_spectrum: size mismatch");
  Spectrum s;
  auto eig = [](const SparseMatrix& h) {
    const Eigen::MatrixXd d(h);
    // Symmetrize away assembly round-off before the dense solve.
    return dense_sym_eigenvalues(0.5 * (d + d.transpose()));
  };
  switch (kind) {
    case RegKind::tv_independent:
      s.eigenvalues = eig(block_diag(tv_hessian_matrix(p1, x.head(n), eps, 1.0),
                                     tv_hessian_matrix(p1, x.tail(n), eps, 1.0)));
      break;
    case RegKind::cross_gradient:
      s.eigenvalues = eig(cg_hessian_matrix(p1, x));
      s.block_diagonal_eigenvalues = eig(cg_hessian_matrix(p1, x, true));
      break;
    case RegKind::normalized_cross_gradient:
      s.eigenvalues = eig(ncg_hessian_matrix(p1, x, eps));
      s.block_diagonal_eigenvalues = eig(ncg_hessian_matrix(p1, x, eps, true));
      break;
    case RegKind::vtv:
      s.eigenvalues = eig(vtv_hessian_matrix(p1, x, eps, 1.0));
      break;
    case RegKind::nuclear:
      throw std::invalid_argument("reg_hessian_spectrum: nuclear norm has no Hessian");
  }
  s.negative_fraction = negative_fraction(s.eigenvalues);
  return s;
}

}  // namespace jinv
