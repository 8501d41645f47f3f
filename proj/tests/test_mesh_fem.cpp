#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "jinv/fem.hpp"
#include "jinv/field_io.hpp"
#include "jinv/mesh.hpp"

using namespace jinv;

namespace {

// Strang-Fix 6-point rule, exact for degree 4 (barycentric points, weights sum to 1).
struct QuadPoint {
  Eigen::Vector3d l;
  double w;
};

std::vector<QuadPoint> degree4_rule() {
  const double a = 0.445948490915965, b = 0.091576213509771;
  const double wa = 0.223381589678011, wb = 0.109951743655322;
  return {{{a, a, 1 - 2 * a}, wa}, {{a, 1 - 2 * a, a}, wa}, {{1 - 2 * a, a, a}, wa},
          {{b, b, 1 - 2 * b}, wb}, {{b, 1 - 2 * b, b}, wb}, {{1 - 2 * b, b, b}, wb}};
}

double field_l2_sq_by_quadrature(const FunctionSpace& s, const Vec& v) {
  double total = 0;
  for (std::size_t t = 0; t < s.mesh().num_triangles(); ++t) {
    const double area = s.mesh().triangle_area(t);
    for (const auto& q : degree4_rule()) {
      const Eigen::VectorXd phi = s.shape_values(q.l);
      double u = 0;
      for (int a = 0; a < s.dofs_per_cell(); ++a) u += phi[a] * v[s.cell_dofs(t)[a]];
      total += area * q.w * u * u;
    }
  }
  return total;
}

double symmetry_defect(const SparseMatrix& a) {
  const SparseMatrix at = a.transpose();
  return (a - at).norm() / a.norm();
}

}  // namespace

TEST_CASE("build_mesh counts and tiling") {
  for (int n : {1, 3, 20, 64}) {
    auto mesh = build_mesh(n);
    CHECK(mesh->num_triangles() == static_cast<std::size_t>(2 * n * n));
    CHECK(mesh->num_vertices() == static_cast<std::size_t>((n + 1) * (n + 1)));
    double area = 0;
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
      CHECK(mesh->triangle_area(t) == doctest::Approx(0.5 * mesh->h() * mesh->h()).epsilon(1e-14));
      area += mesh->triangle_area(t);
    }
    CHECK(std::abs(area - 1.0) < 1e-12);
  }
  CHECK(build_mesh(64)->num_triangles() == 8192);
  CHECK(build_mesh(20)->num_triangles() == 800);
  CHECK_THROWS_AS(build_mesh(0), std::invalid_argument);
}

TEST_CASE("triangles are isosceles right triangles") {
  auto mesh = build_mesh(5);
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    const auto& tri = mesh->triangles()[t];
    std::vector<double> len;
    for (int k = 0; k < 3; ++k)
      len.push_back((mesh->vertices()[tri[(k + 1) % 3]] - mesh->vertices()[tri[k]]).norm());
    std::sort(len.begin(), len.end());
    CHECK(len[0] == doctest::Approx(len[1]));
    CHECK(len[2] == doctest::Approx(std::sqrt(2.0) * len[0]));
  }
}

TEST_CASE("build_space dof counts") {
  CHECK(build_space(build_mesh(64), 1)->num_dofs() == 4225);
  CHECK(build_space(build_mesh(64), 2)->num_dofs() == 16641);
  CHECK(build_space(build_mesh(1), 2)->num_dofs() == 9);
  CHECK_THROWS_AS(build_space(build_mesh(2), 3), std::invalid_argument);
}

TEST_CASE("P2 dof map is consistent across shared edges") {
  auto space = build_space(build_mesh(4), 2);
  const auto& mesh = space->mesh();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& d = space->cell_dofs(t);
    const auto& tri = mesh.triangles()[t];
    for (int k = 0; k < 3; ++k) {
      CHECK((space->dof_coordinates()[d[k]] - mesh.vertices()[tri[k]]).norm() < 1e-14);
      const Point mid = 0.5 * (mesh.vertices()[tri[k]] + mesh.vertices()[tri[(k + 1) % 3]]);
      CHECK((space->dof_coordinates()[d[3 + k]] - mid).norm() < 1e-14);
    }
  }
}

TEST_CASE("assemble_mass") {
  for (int order : {1, 2}) {
    auto space = build_space(build_mesh(6), order);
    const SparseMatrix m = assemble_mass(*space);
    CHECK(symmetry_defect(m) < 1e-13);
    CHECK(std::abs(Vec::Ones(m.rows()).dot(m * Vec::Ones(m.rows())) - 1.0) < 1e-12);
    const Vec c = Vec::Constant(m.rows(), 2.5);
    CHECK(c.dot(m * c) == doctest::Approx(6.25).epsilon(1e-12));
    const Vec x = interpolate([](const Point& p) { return p.x(); }, space).values;
    CHECK(x.dot(m * x) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // Row sums reproduce the integrals of the basis functions.
    const Vec rows = m * Vec::Ones(m.rows());
    CHECK(rows.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows.isApprox(assemble_unit_load(*space), 1e-12));
  }
}

TEST_CASE("mass matrix agrees with an independent degree-4 quadrature") {
  auto space = build_space(build_mesh(3), 2);
  const SparseMatrix m = assemble_mass(*space);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    Vec v(m.rows());
    for (auto& x : v) x = nd(rng);
    CHECK(v.dot(m * v) == doctest::Approx(field_l2_sq_by_quadrature(*space, v)).epsilon(1e-12));
  }
}

TEST_CASE("mass matrix is positive definite") {
  auto space = build_space(build_mesh(2), 2);
  Eigen::MatrixXd dense(assemble_mass(*space));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  CHECK(es.eigenvalues().minCoeff() > 0);
}

TEST_CASE("assemble_weighted_stiffness") {
  for (int order : {1, 2}) {
    auto space = build_space(build_mesh(5), order);
    const auto nt = space->mesh().num_triangles();
    std::vector<double> one(nt, 1.0), two(nt, 2.0);
    const SparseMatrix a = assemble_weighted_stiffness(*space, one);
    const SparseMatrix a2 = assemble_weighted_stiffness(*space, two);
    CHECK(symmetry_defect(a) < 1e-13);
    CHECK((a2 - 2.0 * a).norm() < 1e-13 * a.norm());
    CHECK((a * Vec::Ones(a.rows())).norm() < 1e-13);
    // Patch test: exact Dirichlet energy of affine fields.
    const Vec x = interpolate([](const Point& p) { return p.x(); }, space).values;
    CHECK(x.dot(a * x) == doctest::Approx(1.0).epsilon(1e-12));
    const Vec lin = interpolate([](const Point& p) { return 3 * p.x() - 2 * p.y() + 1; }, space).values;
    CHECK(lin.dot(a * lin) == doctest::Approx(13.0).epsilon(1e-12));
    std::vector<double> bad(nt, 1.0);
    bad[3] = 0.0;
    CHECK_THROWS_AS(assemble_weighted_stiffness(*space, bad), std::invalid_argument);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(assemble_weighted_stiffness(*space, bad), std::invalid_argument);
  }
}

TEST_CASE("weighted stiffness is positive semidefinite with constant kernel") {
  auto space = build_space(build_mesh(2), 2);
  std::vector<double> w(space->mesh().num_triangles());
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = 0.5 + 0.1 * static_cast<double>(t);
  Eigen::MatrixXd dense(assemble_weighted_stiffness(*space, w));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  CHECK(std::abs(es.eigenvalues()[0]) < 1e-12);
  CHECK(es.eigenvalues()[1] > 1e-6);
}

TEST_CASE("point_eval_operator") {
  auto p1 = build_space(build_mesh(4), 1);
  auto p2 = build_space(build_mesh(4), 2);
  for (const auto& space : {p1, p2}) {
    const auto& xs = space->dof_coordinates();
    const SparseMatrix b = point_eval_operator(*space, {xs[7]});
    CHECK(b.nonZeros() == 1);
    CHECK(b.coeff(0, 7) == doctest::Approx(1.0));
    const Vec x = interpolate([](const Point& p) { return p.x(); }, space).values;
    const SparseMatrix e = point_eval_operator(*space, {{0.25, 0.75}, {0.33, 0.71}, {1.0, 1.0}});
    const Vec vals = e * x;
    CHECK(vals[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(vals[1] == doctest::Approx(0.33).epsilon(1e-14));
    CHECK(vals[2] == doctest::Approx(1.0).epsilon(1e-14));
  }
  // Quadratic reproduction on P2.
  const Vec xy = interpolate([](const Point& p) { return p.x() * p.y(); }, p2).values;
  const SparseMatrix e = point_eval_operator(*p2, {{0.13, 0.41}});
  CHECK((e * xy)[0] == doctest::Approx(0.13 * 0.41).epsilon(1e-13));

  std::vector<Point> lattice;
  for (int i = 1; i <= 50; ++i)
    for (int j = 1; j <= 50; ++j) lattice.emplace_back(i / 51.0, j / 51.0);
  CHECK(point_eval_operator(*p2, lattice).rows() == 2500);
  CHECK_THROWS_AS(point_eval_operator(*p1, {{1.2, 0.5}}), std::invalid_argument);
}

TEST_CASE("element_gradients") {
  auto space = build_space(build_mesh(6), 1);
  const auto gx = element_gradients(interpolate([](const Point& p) { return p.x(); }, space));
  const auto gxy = element_gradients(interpolate([](const Point& p) { return p.x() + 2 * p.y(); }, space));
  const auto gc = element_gradients(interpolate([](const Point&) { return 4.0; }, space));
  for (Eigen::Index t = 0; t < gx.cols(); ++t) {
    CHECK((gx.col(t) - Eigen::Vector2d(1, 0)).norm() < 1e-12);
    CHECK((gxy.col(t) - Eigen::Vector2d(1, 2)).norm() < 1e-12);
    CHECK(gc.col(t).norm() < 1e-12);
  }
  // Linearity.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Vec a(space->num_dofs()), b(space->num_dofs());
  for (auto& v : a) v = nd(rng);
  for (auto& v : b) v = nd(rng);
  const ElementGradients lhs = element_gradients(*space, 2.0 * a - 3.0 * b);
  const ElementGradients rhs = 2.0 * element_gradients(*space, a) - 3.0 * element_gradients(*space, b);
  CHECK((lhs - rhs).norm() < 1e-10 * rhs.norm());

  CHECK_THROWS_AS(element_gradients(ScalarField(build_space(build_mesh(2), 2))), std::invalid_argument);
}

TEST_CASE("interpolate") {
  auto p1 = build_space(build_mesh(8), 1);
  const auto c = interpolate([](const Point&) { return 0.625; }, p1);
  CHECK((c.values.array() == 0.625).all());

  const auto step = interpolate([](const Point& p) { return p.y() > 0.5 ? 1.0 : 0.0; }, p1);
  const auto g = element_gradients(step);
  for (std::size_t t = 0; t < p1->mesh().num_triangles(); ++t) {
    double lo = 1, hi = -1;
    for (int v : p1->mesh().triangles()[t]) {
      lo = std::min(lo, p1->mesh().vertices()[v].y());
      hi = std::max(hi, p1->mesh().vertices()[v].y());
    }
    const bool cut = lo <= 0.5 && hi > 0.5;
    if (!cut) CHECK(g.col(static_cast<Eigen::Index>(t)).norm() == 0.0);
  }

  auto p2 = build_space(build_mesh(3), 2);
  const auto xy = interpolate([](const Point& p) { return p.x() * p.y(); }, p2);
  const auto& d = p2->cell_dofs(5);
  const Point mid = p2->dof_coordinates()[d[4]];
  CHECK(xy.values[d[4]] == doctest::Approx(mid.x() * mid.y()));
  CHECK_THROWS_AS(interpolate([](const Point&) { return std::nan(""); }, p1), std::invalid_argument);
}

TEST_CASE("field file round trip") {
  auto p2 = build_space(build_mesh(3), 2);
  const auto f = interpolate([](const Point& p) { return std::sin(p.x()) * std::exp(p.y()) / 3.0; }, p2);
  std::stringstream ss;
  write_field(ss, f);
  const std::string text = ss.str();
  CHECK(text.rfind("JINV-FIELD v1\nN 3 order 2\n", 0) == 0);
  const auto g = read_field(ss);
  CHECK(g.space->order() == 2);
  CHECK(g.values == f.values);
}
