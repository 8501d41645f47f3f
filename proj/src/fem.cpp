#include "jinv/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace jinv {

namespace {

// Reference P2 mass pattern, scaled by area/180. Local order (v0,v1,v2,e01,e12,e20).
const Eigen::Matrix<double, 6, 6>& p2_mass_pattern() {
  static const Eigen::Matrix<double, 6, 6> m = [] {
    Eigen::Matrix<double, 6, 6> r;
    r << 6, -1, -1, 0, -4, 0,
        -1, 6, -1, 0, 0, -4,
        -1, -1, 6, -4, 0, 0,
         0, 0, -4, 32, 16, 16,
        -4, 0, 0, 16, 32, 16,
         0, -4, 0, 16, 16, 32;
    return r;
  }();
  return m;
}

// Gradients of the six P2 shape functions at barycentric point l.
Eigen::Matrix<double, 2, 6> p2_shape_gradients(const Eigen::Matrix<double, 2, 3>& gl,
                                               const Eigen::Vector3d& l) {
  Eigen::Matrix<double, 2, 6> g;
  for (int k = 0; k < 3; ++k) g.col(k) = (4 * l[k] - 1) * gl.col(k);
  for (int k = 0; k < 3; ++k) {
    const int m = (k + 1) % 3;
    g.col(3 + k) = 4 * (l[k] * gl.col(m) + l[m] * gl.col(k));
  }
  return g;
}

SparseMatrix assemble(const FunctionSpace& space,
                      const std::function<Eigen::MatrixXd(std::size_t)>& local) {
  const auto n = static_cast<Eigen::Index>(space.num_dofs());
  std::vector<Eigen::Triplet<double>> trip;
  const int nd = space.dofs_per_cell();
  trip.reserve(space.mesh().num_triangles() * nd * nd);
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const Eigen::MatrixXd ke = local(t);
    const auto& dofs = space.cell_dofs(t);
    for (int a = 0; a < nd; ++a)
      for (int b = 0; b < nd; ++b) trip.emplace_back(dofs[a], dofs[b], ke(a, b));
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

Eigen::MatrixXd local_mass(const FunctionSpace& space, std::size_t t) {
  const double area = space.mesh().triangle_area(t);
  if (space.order() == 1) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Constant(1.0);
    m.diagonal().setConstant(2.0);
    return m * (area / 12.0);
  }
  return p2_mass_pattern() * (area / 180.0);
}

Eigen::MatrixXd local_stiffness(const FunctionSpace& space, std::size_t t) {
  const double area = space.mesh().triangle_area(t);
  const auto gl = space.mesh().barycentric_gradients(t);
  if (space.order() == 1) return area * gl.transpose() * gl;
  // Edge-midpoint rule is exact for the quadratic integrand.
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(6, 6);
  for (int e = 0; e < 3; ++e) {
    Eigen::Vector3d l = Eigen::Vector3d::Zero();
    l[e] = 0.5;
    l[(e + 1) % 3] = 0.5;
    const auto g = p2_shape_gradients(gl, l);
    k += (area / 3.0) * g.transpose() * g;
  }
  return k;
}

Eigen::VectorXd local_load(const FunctionSpace& space, std::size_t t) {
  const double area = space.mesh().triangle_area(t);
  if (space.order() == 1) return Eigen::Vector3d::Constant(area / 3.0);
  Eigen::VectorXd f(6);
  f << 0, 0, 0, area / 3, area / 3, area / 3;
  return f;
}

SparseMatrix assemble_mass(const FunctionSpace& space) {
  return assemble(space, [&](std::size_t t) -> Eigen::MatrixXd { return local_mass(space, t); });
}

SparseMatrix assemble_weighted_stiffness(const FunctionSpace& space, std::span<const double> weight) {
  if (weight.size() != space.mesh().num_triangles())
    throw std::invalid_argument("assemble_weighted_stiffness: expected one weight per triangle");
  for (double w : weight)
    if (!(std::isfinite(w) && w > 0.0))
      throw std::invalid_argument("assemble_weighted_stiffness: weight must be finite and positive");
  return assemble(space, [&](std::size_t t) -> Eigen::MatrixXd { return weight[t] * local_stiffness(space, t); });
}

Vec assemble_unit_load(const FunctionSpace& space) {
  Vec f = Vec::Zero(static_cast<Eigen::Index>(space.num_dofs()));
  for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto fe = local_load(space, t);
    const auto& dofs = space.cell_dofs(t);
    for (int a = 0; a < space.dofs_per_cell(); ++a) f[dofs[a]] += fe[a];
  }
  return f;
}

SparseMatrix point_eval_operator(const FunctionSpace& space, const std::vector<Point>& points) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t t = space.mesh().locate(points[i]);
    const Eigen::VectorXd phi = space.shape_values(space.mesh().barycentric(t, points[i]));
    const auto& dofs = space.cell_dofs(t);
    for (int a = 0; a < space.dofs_per_cell(); ++a)
      if (std::abs(phi[a]) > 1e-14) trip.emplace_back(static_cast<int>(i), dofs[a], phi[a]);
  }
  SparseMatrix b(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(space.num_dofs()));
  b.setFromTriplets(trip.begin(), trip.end());
  return b;
}

ElementGradients element_gradients(const FunctionSpace& space, const Vec& values) {
  if (space.order() != 1)
    throw std::invalid_argument("element_gradients: parameter fields must be order 1");
  if (static_cast<std::size_t>(values.size()) != space.num_dofs())
    throw std::invalid_argument("element_gradients: size mismatch");
  const auto& mesh = space.mesh();
  ElementGradients g(2, static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto gl = mesh.barycentric_gradients(t);
    g.col(static_cast<Eigen::Index>(t)) =
        gl.col(0) * values[tri[0]] + gl.col(1) * values[tri[1]] + gl.col(2) * values[tri[2]];
  }
  return g;
}

ElementGradients element_gradients(const ScalarField& field) {
  return element_gradients(*field.space, field.values);
}

ScalarField interpolate(const std::function<double(const Point&)>& f,
                        std::shared_ptr<const FunctionSpace> space) {
  const auto& xs = space->dof_coordinates();
  Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = f(xs[i]);
    if (!std::isfinite(v[static_cast<Eigen::Index>(i)]))
      throw std::invalid_argument("interpolate: nonfinite value at dof " + std::to_string(i));
  }
  return ScalarField(std::move(space), std::move(v));
}

Vec centroid_values(const FunctionSpace& space, const Vec& values) {
  const auto& mesh = space.mesh();
  Vec c(static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    c[static_cast<Eigen::Index>(t)] = (values[tri[0]] + values[tri[1]] + values[tri[2]]) / 3.0;
  }
  return c;
}

Vec scatter_centroid(const FunctionSpace& space, const Vec& per_triangle) {
  const auto& mesh = space.mesh();
  Vec out = Vec::Zero(static_cast<Eigen::Index>(space.num_dofs()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double w = per_triangle[static_cast<Eigen::Index>(t)] / 3.0;
    for (int k = 0; k < 3; ++k) out[tri[k]] += w;
  }
  return out;
}

}  // namespace jinv
