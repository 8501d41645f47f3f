#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "jinv/errors.hpp"
#include "jinv/fem.hpp"
#include "jinv/regularizers.hpp"
#include "support.hpp"

using namespace jinv;
using testing::best_fd_error;
using testing::random_vec;
using testing::rel_err;

namespace {

auto p1_space(int n) { return build_space(build_mesh(n), 1); }

Vec field(const FunctionSpace& s, double (*f)(double, double)) {
  Vec v(static_cast<Eigen::Index>(s.num_dofs()));
  for (std::size_t i = 0; i < s.num_dofs(); ++i)
    v[static_cast<Eigen::Index>(i)] = f(s.dof_coordinates()[i].x(), s.dof_coordinates()[i].y());
  return v;
}

double fx(double x, double) { return x; }
double fy(double, double y) { return y; }
double fxy(double x, double y) { return x + y; }
double fx2y(double x, double y) { return x + 2 * y; }
double fc(double, double) { return 0.7; }

// Per-element oracle for the nuclear gradient: G (G^T G + eps I)^{-1/2}.
Eigen::Matrix2d nn_element_grad(const Eigen::Matrix2d& g, double eps) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g.transpose() * g + eps * Eigen::Matrix2d::Identity());
  return g * es.operatorInverseSqrt();
}

}  // namespace

TEST_CASE("svd2x2") {
  auto check = [](const Eigen::Matrix2d& g) {
    const Svd2 s = svd2x2(g);
    const Eigen::Matrix2d rec = s.u * s.sigma.asDiagonal() * s.v.transpose();
    CHECK((rec - g).norm() <= 1e-12 * std::max(1.0, g.norm()));
    CHECK((s.u.transpose() * s.u - Eigen::Matrix2d::Identity()).norm() < 1e-13);
    CHECK((s.v.transpose() * s.v - Eigen::Matrix2d::Identity()).norm() < 1e-13);
    CHECK(s.sigma[0] >= s.sigma[1]);
    CHECK(s.sigma[1] >= 0.0);
    CHECK(s.sigma.squaredNorm() == doctest::Approx(g.squaredNorm()).epsilon(1e-12));
    return s;
  };
  auto s = check(Eigen::Matrix2d::Identity());
  CHECK(s.sigma[0] == doctest::Approx(1));
  CHECK(s.sigma[1] == doctest::Approx(1));

  Eigen::Matrix2d g;
  g << 1, 2, 0, 0;
  s = check(g);
  CHECK(s.sigma[0] == doctest::Approx(std::sqrt(5.0)));
  CHECK(std::abs(s.sigma[1]) < 1e-14);

  g << 3, 0, 0, -2;
  s = check(g);
  CHECK(s.sigma[0] == doctest::Approx(3));
  CHECK(s.sigma[1] == doctest::Approx(2));

  check(Eigen::Matrix2d::Zero());
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Vec r = random_vec(4, rng);
    g << r[0], r[1], r[2], r[3];
    const auto sv = check(g);
    Eigen::JacobiSVD<Eigen::Matrix2d> ref(g);
    CHECK(sv.sigma[0] == doctest::Approx(ref.singularValues()[0]).epsilon(1e-12));
    CHECK(sv.sigma[1] == doctest::Approx(ref.singularValues()[1]).epsilon(1e-10));
  }
  g << 1, std::nan(""), 0, 0;
  CHECK_THROWS_AS(svd2x2(g), std::invalid_argument);
}

TEST_CASE("tv value examples") {
  const auto s = p1_space(8);
  const Vec x = field(*s, fx);
  CHECK(tv_value_grad(*s, x, 1e-14, 2.5).value == doctest::Approx(2.5).epsilon(1e-6));
  const auto c = tv_value_grad(*s, field(*s, fc), 1e-2, 3.0);
  CHECK(c.value == doctest::Approx(3.0 * 0.1));
  CHECK(c.gradient.norm() == 0.0);
  CHECK_THROWS_AS(tv_value_grad(*s, x, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("tv Hessian annihilates the gradient direction as eps -> 0") {
  const auto s = p1_space(8);
  const Vec x = field(*s, fx);
  const double a1 = tv_hessian_apply(*s, x, x, 1e-4, 1.0).norm();
  const double a2 = tv_hessian_apply(*s, x, x, 1e-8, 1.0).norm();
  CHECK(a2 < 1e-3 * a1);
  CHECK(a2 < 1e-6);
}

TEST_CASE("cross-gradient value examples") {
  const auto s = p1_space(8);
  CHECK(cg_value_grad(*s, stack_pair(field(*s, fx), field(*s, fy))).value == doctest::Approx(0.5));
  const auto same = cg_value_grad(*s, stack_pair(field(*s, fx), field(*s, fx)));
  CHECK(std::abs(same.value) < 1e-14);
  CHECK(same.gradient.norm() < 1e-12);
  CHECK(cg_value_grad(*s, stack_pair(field(*s, fx), field(*s, fxy))).value == doctest::Approx(0.5));
  // Parallel per-element gradients give zero.
  CHECK(std::abs(cg_value_grad(*s, stack_pair(field(*s, fx2y), -3.0 * field(*s, fx2y))).value) < 1e-12);
}

TEST_CASE("normalized cross-gradient value examples") {
  const auto s = p1_space(8);
  for (double eps : {1e-4, 1e-2, 1.0})
    CHECK(ncg_value_grad(*s, stack_pair(field(*s, fx), field(*s, fy)), eps).value == doctest::Approx(0.5));
  const double eps = 0.1;
  const double expect = 0.5 * (1 - std::pow(1 / (1 + eps), 2));
  CHECK(ncg_value_grad(*s, stack_pair(field(*s, fx), field(*s, fx)), eps).value == doctest::Approx(expect));
  std::mt19937_64 rng(4);
  const Vec r = stack_pair(random_vec(81, rng), random_vec(81, rng));
  const double v = ncg_value_grad(*s, r, 1e-3).value;
  CHECK(v >= 0.0);
  CHECK(v <= 0.5);
}

TEST_CASE("vtv value examples") {
  const auto s = p1_space(8);
  CHECK(vtv_value_grad(*s, stack_pair(field(*s, fx), field(*s, fy)), 1e-14, 2.0).value ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
  const auto c = vtv_value_grad(*s, stack_pair(field(*s, fc), field(*s, fc)), 1e-2, 2.0);
  CHECK(c.value == doctest::Approx(0.2));
  CHECK(c.gradient.norm() == 0.0);
}

TEST_CASE("vtv per-element eigenpairs") {
  // Affine pair: one element type of gradient everywhere, so the assembled
  // action reduces to the per-element tensor.
  const auto s = p1_space(4);
  const Vec m1 = field(*s, fx), m2 = field(*s, fx2y);
  const Vec x = stack_pair(m1, m2);
  const double eps = 1e-14;
  // Direction [m1; m2] spans the kernel of the tensor at eps = 0.
  CHECK(vtv_hessian_apply(*s, x, x, eps, 1.0).norm() < 1e-6);
  // [grad m2; -grad m1] has eigenvalue 1/|grad m|: compare actions tested against itself.
  const Vec w = stack_pair(m2, -m1);
  const Vec hw = vtv_hessian_apply(*s, x, w, eps, 1.0);
  const double gnorm = std::sqrt(1.0 + 5.0);
  const Vec lw = (1.0 / gnorm) * stack_pair(Vec(assemble_weighted_stiffness(*s, std::vector<double>(32, 1.0)) * m2),
                                            Vec(-(assemble_weighted_stiffness(*s, std::vector<double>(32, 1.0)) * m1)));
  CHECK(rel_err(hw, lw) < 1e-10);
}

TEST_CASE("nuclear value examples") {
  const auto s = p1_space(8);
  std::mt19937_64 rng(9);
  const Vec m1 = random_vec(81, rng);
  const double eps = 1e-10;
  // Rank-1 elements: the integrands differ only by the sqrt(eps) of the zero singular value.
  const Vec rank1 = stack_pair(m1, 2.0 * m1);
  CHECK(nn_value_grad(*s, rank1, eps, 1.0).value - vtv_value_grad(*s, rank1, eps, 1.0).value ==
        doctest::Approx(std::sqrt(eps)).epsilon(1e-6));
  const Vec gen = stack_pair(m1, random_vec(81, rng));
  CHECK(nn_value_grad(*s, gen, eps, 1.0).value > vtv_value_grad(*s, gen, eps, 1.0).value);
}

TEST_CASE("nuclear gradient matches the G (G^T G + eps)^(-1/2) oracle") {
  const auto s = p1_space(6);
  std::mt19937_64 rng(12);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  const Vec m1 = random_vec(n, rng), m2 = random_vec(n, rng);
  const double eps = 1e-2, gamma = 1.7;
  const auto g1 = element_gradients(*s, m1), g2 = element_gradients(*s, m2);
  Vec expect = Vec::Zero(2 * n);
  for (std::size_t t = 0; t < s->mesh().num_triangles(); ++t) {
    Eigen::Matrix2d g;
    g.col(0) = g1.col(static_cast<Eigen::Index>(t));
    g.col(1) = g2.col(static_cast<Eigen::Index>(t));
    const Eigen::Matrix2d dg = gamma * s->mesh().triangle_area(t) * nn_element_grad(g, eps);
    const auto gl = s->mesh().barycentric_gradients(t);
    const auto& tri = s->mesh().triangles()[t];
    for (int k = 0; k < 3; ++k) {
      expect[tri[k]] += gl.col(k).dot(dg.col(0));
      expect[n + tri[k]] += gl.col(k).dot(dg.col(1));
    }
  }
  CHECK(rel_err(nn_value_grad(*s, stack_pair(m1, m2), eps, gamma).gradient, expect) < 1e-12);
}

TEST_CASE("gradients agree with central differences") {
  const auto s = p1_space(8);
  std::mt19937_64 rng(21);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  for (int trial = 0; trial < 3; ++trial) {
    const Vec x = random_vec(2 * n, rng);
    const Vec d = random_vec(2 * n, rng);
    const Vec m = x.head(n), dm = d.head(n);
    SUBCASE("tv") {
      auto f = [&](const Vec& v) { return tv_value_grad(*s, v, 1e-2, 1.3).value; };
      CHECK(best_fd_error(f, m, dm, tv_value_grad(*s, m, 1e-2, 1.3).gradient.dot(dm)) < 1e-5);
    }
    SUBCASE("cross-gradient") {
      auto f = [&](const Vec& v) { return cg_value_grad(*s, v).value; };
      CHECK(best_fd_error(f, x, d, cg_value_grad(*s, x).gradient.dot(d)) < 1e-5);
    }
    SUBCASE("normalized cross-gradient") {
      for (double eps : {1e-4, 1e-1}) {
        auto f = [&](const Vec& v) { return ncg_value_grad(*s, v, eps).value; };
        CHECK(best_fd_error(f, x, d, ncg_value_grad(*s, x, eps).gradient.dot(d)) < 1e-5);
      }
    }
    SUBCASE("vtv") {
      auto f = [&](const Vec& v) { return vtv_value_grad(*s, v, 1e-3, 0.8).value; };
      CHECK(best_fd_error(f, x, d, vtv_value_grad(*s, x, 1e-3, 0.8).gradient.dot(d)) < 1e-5);
    }
    SUBCASE("nuclear") {
      auto f = [&](const Vec& v) { return nn_value_grad(*s, v, 1e-3, 0.8).value; };
      CHECK(best_fd_error(f, x, d, nn_value_grad(*s, x, 1e-3, 0.8).gradient.dot(d)) < 1e-5);
    }
  }
}

TEST_CASE("Hessian actions agree with differences of gradients and are symmetric") {
  const auto s = p1_space(8);
  std::mt19937_64 rng(33);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  const Vec x = random_vec(2 * n, rng), d = random_vec(2 * n, rng), q = random_vec(2 * n, rng);
  auto check = [&](const std::function<Vec(const Vec&)>& grad,
                   const std::function<Vec(const Vec&, const Vec&)>& hvp, const Vec& at, const Vec& p,
                   const Vec& r) {
    CHECK(best_fd_error(grad, at, p, hvp(at, p)) < 1e-4);
    CHECK(rel_err(hvp(at, p).dot(r), p.dot(hvp(at, r))) < 1e-10);
  };
  SUBCASE("tv") {
    const double eps = 1e-2;
    check([&](const Vec& v) { return tv_value_grad(*s, v, eps, 1.1).gradient; },
          [&](const Vec& v, const Vec& p) { return tv_hessian_apply(*s, v, p, eps, 1.1); }, x.head(n),
          d.head(n), q.head(n));
  }
  SUBCASE("cross-gradient") {
    check([&](const Vec& v) { return cg_value_grad(*s, v).gradient; },
          [&](const Vec& v, const Vec& p) { return cg_hessian_apply(*s, v, p); }, x, d, q);
  }
  SUBCASE("normalized cross-gradient") {
    for (double eps : {1e-4, 1e-1})
      check([&](const Vec& v) { return ncg_value_grad(*s, v, eps).gradient; },
            [&](const Vec& v, const Vec& p) { return ncg_hessian_apply(*s, v, p, eps); }, x, d, q);
  }
  SUBCASE("vtv") {
    check([&](const Vec& v) { return vtv_value_grad(*s, v, 1e-3, 0.8).gradient; },
          [&](const Vec& v, const Vec& p) { return vtv_hessian_apply(*s, v, p, 1e-3, 0.8); }, x, d, q);
  }
}

TEST_CASE("assembled Hessians match the actions") {
  const auto s = p1_space(5);
  std::mt19937_64 rng(8);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  const Vec x = random_vec(2 * n, rng), d = random_vec(2 * n, rng);
  CHECK(rel_err(Vec(cg_hessian_matrix(*s, x) * d), cg_hessian_apply(*s, x, d)) < 1e-13);
  CHECK(rel_err(Vec(ncg_hessian_matrix(*s, x, 1e-3) * d), ncg_hessian_apply(*s, x, d, 1e-3)) < 1e-13);
  CHECK(rel_err(Vec(vtv_hessian_matrix(*s, x, 1e-3, 2.0) * d), vtv_hessian_apply(*s, x, d, 1e-3, 2.0)) < 1e-13);
  CHECK(rel_err(Vec(tv_hessian_matrix(*s, x.head(n), 1e-3, 2.0) * d.head(n)),
                tv_hessian_apply(*s, x.head(n), d.head(n), 1e-3, 2.0)) < 1e-13);
}

TEST_CASE("vtv Hessian is positive semidefinite") {
  const auto s = p1_space(12);
  std::mt19937_64 rng(5);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  const auto sp = reg_hessian_spectrum(RegKind::vtv, *s, random_vec(2 * n, rng), 1e-4);
  CHECK(sp.eigenvalues.front() >= -1e-8 * sp.eigenvalues.back());
  CHECK(sp.negative_fraction == 0.0);
}

TEST_CASE("cross-gradient block-diagonal tensor D(m) has eigenvalues {0, |grad m|^2}") {
  const auto s = p1_space(1);
  // One triangle pair, affine m2 = x + 2y, m1 = 0: the m1 block is D(m2) (x) stiffness pattern.
  const Vec x = stack_pair(Vec::Zero(4), field(*s, fx2y));
  const Eigen::MatrixXd h(cg_hessian_matrix(*s, x, true));
  // Apply to m1 = direction of grad m2 (kernel) and to the orthogonal direction.
  const Vec along = stack_pair(field(*s, fx2y), Vec::Zero(4));
  const Vec across = stack_pair(field(*s, [](double xx, double yy) { return 2 * xx - yy; }), Vec::Zero(4));
  CHECK((h * along).norm() < 1e-12);
  // Orthogonal direction sees |grad m2|^2 = 5 times the Laplacian energy of (2x - y), which is 5.
  CHECK(across.dot(h * across) == doctest::Approx(25.0));
}

TEST_CASE("cross-gradient preconditioner is SPD") {
  const auto s = p1_space(6);
  std::mt19937_64 rng(14);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  RegConfig c;
  c.kind = RegKind::cross_gradient;
  c.gamma1 = 1e-2;
  c.gamma2 = 2e-2;
  c.gamma = 5.0;
  c.eps_tv = 1e-3;
  c.eps_joint = 1e-3;
  c.precond_shift = 1e-8;
  const auto reg = joint_reg_build(c, s);
  const SparseMatrix mass = assemble_mass(*s);
  const double min_mass = dense_sym_eigenvalues(Eigen::MatrixXd(mass)).front();
  for (const Vec& x : {Vec(Vec::Zero(2 * n)), random_vec(2 * n, rng)}) {
    const Eigen::MatrixXd p(reg.preconditioner_matrix(x));
    const auto ev = dense_sym_eigenvalues(0.5 * (p + p.transpose()));
    CHECK(ev.front() > 0.0);
    CHECK(ev.front() >= 1e-8 * min_mass * (1 - 1e-6));
  }
  const Vec r = random_vec(2 * n, rng);
  const Vec x = random_vec(2 * n, rng);
  const Vec z = reg.preconditioner(x)(r);
  // Backward stability: residual small relative to |P| |z|.
  const SparseMatrix p = reg.preconditioner_matrix(x);
  CHECK((p * z - r).norm() <= 1e-12 * Eigen::MatrixXd(p).norm() * z.norm());
}

TEST_CASE("RegConfig validation follows the hyperparameter table") {
  RegConfig c;
  c.kind = RegKind::vtv;
  c.gamma = 3e-7;
  c.eps_joint = 1e-3;
  CHECK_NOTHROW(c.validate());
  c.gamma1 = 0.0;
  CHECK_NOTHROW(c.validate());
  c.gamma1 = 1e-3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.gamma1.reset();
  c.eps_tv = 1e-3;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RegConfig{};
  c.kind = RegKind::nuclear;
  c.gamma = 3e-7;
  c.eps_joint = 1e-3;
  CHECK_NOTHROW(c.validate());
  c.gamma.reset();
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RegConfig{};
  c.kind = RegKind::cross_gradient;
  c.gamma1 = c.gamma2 = c.gamma = 1.0;
  c.eps_joint = 1e-3;
  CHECK_THROWS_AS(c.validate(), ConfigError);  // eps_tv missing
  c.eps_tv = 1e-3;
  CHECK_NOTHROW(c.validate());
  c.eps_tv = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RegConfig{};
  c.kind = RegKind::tv_independent;
  c.gamma1 = c.gamma2 = 1.0;
  c.eps_tv = 1e-3;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  CHECK(parse_reg_kind("ncg") == RegKind::normalized_cross_gradient);
  CHECK(parse_reg_kind("nuclear") == RegKind::nuclear);
  CHECK_THROWS_AS(parse_reg_kind("l1"), ConfigError);
}

TEST_CASE("JointRegularizer composition") {
  const auto s = p1_space(8);
  std::mt19937_64 rng(40);
  const auto n = static_cast<Eigen::Index>(s->num_dofs());
  const Vec x = random_vec(2 * n, rng);

  RegConfig c;
  c.kind = RegKind::cross_gradient;
  c.gamma1 = 0.3;
  c.gamma2 = 0.3;
  c.gamma = 0.0;
  c.eps_tv = 1e-3;
  c.eps_joint = 1e-3;
  const double indep = tv_value_grad(*s, x.head(n), 1e-3, 0.3).value + tv_value_grad(*s, x.tail(n), 1e-3, 0.3).value;
  CHECK(rel_err(joint_reg_build(c, s).value(x), indep) < 1e-14);

  SUBCASE("swap symmetry with equal TV weights") {
    const Vec sw = stack_pair(x.tail(n), x.head(n));
    for (auto k : {RegKind::cross_gradient, RegKind::normalized_cross_gradient}) {
      c.kind = k;
      c.gamma = 2.0;
      const auto reg = joint_reg_build(c, s);
      CHECK(rel_err(reg.value(x), reg.value(sw)) < 1e-13);
    }
    RegConfig v;
    v.kind = RegKind::vtv;
    v.gamma = 1.0;
    v.eps_joint = 1e-3;
    CHECK(rel_err(joint_reg_build(v, s).value(x), joint_reg_build(v, s).value(sw)) < 1e-13);
    v.kind = RegKind::nuclear;
    CHECK(rel_err(joint_reg_build(v, s).value(x), joint_reg_build(v, s).value(sw)) < 1e-13);
  }
  SUBCASE("joint Hessian matches FD of the joint gradient") {
    for (auto k : {RegKind::cross_gradient, RegKind::normalized_cross_gradient, RegKind::tv_independent}) {
      c.kind = k;
      c.gamma = k == RegKind::tv_independent ? std::optional<double>() : std::optional<double>(2.0);
      if (k == RegKind::tv_independent) c.eps_joint.reset();
      const auto reg = joint_reg_build(c, s);
      const Vec d = random_vec(2 * n, rng);
      CHECK(best_fd_error([&](const Vec& v) { return reg.value_grad(v).gradient; }, x, d, reg.hessian_apply(x, d)) <
            1e-4);
      CHECK(rel_err(Vec(reg.hessian_matrix(x) * d), reg.hessian_apply(x, d)) < 1e-12);
    }
  }
  SUBCASE("nuclear kind has no Hessian") {
    RegConfig v;
    v.kind = RegKind::nuclear;
    v.gamma = 1.0;
    v.eps_joint = 1e-3;
    const auto reg = joint_reg_build(v, s);
    CHECK_FALSE(reg.has_hessian());
    CHECK_THROWS_AS(reg.hessian_apply(x, x), std::logic_error);
    CHECK_THROWS_AS(reg_hessian_spectrum(RegKind::nuclear, *s, x, 1e-3), std::invalid_argument);
  }
}
