#include "jinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jinv {

StructuredMesh::StructuredMesh(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("build_mesh: N must be >= 1, got " + std::to_string(n));
  const int nv = n + 1;
  vertices_.reserve(static_cast<std::size_t>(nv) * nv);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices_.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);

  auto vid = [nv](int i, int j) { return j * nv + i; };
  triangles_.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      triangles_.push_back({v00, v10, v11});
      triangles_.push_back({v00, v11, v01});
    }
  }

  for (int i = 0; i < n; ++i) {
    boundary_.push_back({{vid(i, 0), vid(i + 1, 0)}, BoundarySide::bottom});
    boundary_.push_back({{vid(i, n), vid(i + 1, n)}, BoundarySide::top});
  }
  for (int j = 0; j < n; ++j) {
    boundary_.push_back({{vid(0, j), vid(0, j + 1)}, BoundarySide::left});
    boundary_.push_back({{vid(n, j), vid(n, j + 1)}, BoundarySide::right});
  }
}

double StructuredMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  const Point a = vertices_[tri[1]] - vertices_[tri[0]];
  const Point b = vertices_[tri[2]] - vertices_[tri[0]];
  return 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
}

Point StructuredMesh::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

std::size_t StructuredMesh::locate(const Point& p) const {
  constexpr double tol = 1e-12;
  if (!(p.x() >= -tol && p.x() <= 1 + tol && p.y() >= -tol && p.y() <= 1 + tol))
    throw std::invalid_argument("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                                ") outside the unit square");
  const double xs = std::clamp(p.x(), 0.0, 1.0) * n_;
  const double ys = std::clamp(p.y(), 0.0, 1.0) * n_;
  const int i = std::min(static_cast<int>(std::floor(xs)), n_ - 1);
  const int j = std::min(static_cast<int>(std::floor(ys)), n_ - 1);
  const double xi = xs - i, eta = ys - j;
  const std::size_t square = static_cast<std::size_t>(j) * n_ + i;
  return 2 * square + (xi >= eta ? 0 : 1);
}

Eigen::Vector3d StructuredMesh::barycentric(std::size_t t, const Point& p) const {
  const auto& tri = triangles_[t];
  const Point& a = vertices_[tri[0]];
  const Point& b = vertices_[tri[1]];
  const Point& c = vertices_[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
  const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

Eigen::Matrix<double, 2, 3> StructuredMesh::barycentric_gradients(std::size_t t) const {
  const auto& tri = triangles_[t];
  const Point& a = vertices_[tri[0]];
  const Point& b = vertices_[tri[1]];
  const Point& c = vertices_[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  Eigen::Matrix<double, 2, 3> g;
  // grad(lambda_k) = rot(opposite edge) / (2 area), oriented counter-clockwise
  g.col(0) << (b.y() - c.y()) / det, (c.x() - b.x()) / det;
  g.col(1) << (c.y() - a.y()) / det, (a.x() - c.x()) / det;
  g.col(2) << (a.y() - b.y()) / det, (b.x() - a.x()) / det;
  return g;
}

std::shared_ptr<const StructuredMesh> build_mesh(int n) {
  return std::make_shared<const StructuredMesh>(n);
}

FunctionSpace::FunctionSpace(std::shared_ptr<const StructuredMesh> mesh, int order)
    : mesh_(std::move(mesh)), order_(order) {
  if (!mesh_) throw std::invalid_argument("build_space: null mesh");
  if (order != 1 && order != 2)
    throw std::invalid_argument("build_space: unsupported order " + std::to_string(order));
  const int n = mesh_->n();
  lattice_ = order * n + 1;
  coords_.reserve(static_cast<std::size_t>(lattice_) * lattice_);
  for (int j = 0; j < lattice_; ++j)
    for (int i = 0; i < lattice_; ++i)
      coords_.emplace_back(static_cast<double>(i) / (order * n), static_cast<double>(j) / (order * n));

  const int nv = n + 1;
  cell_dofs_.resize(mesh_->num_triangles());
  for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
    const auto& tri = mesh_->triangles()[t];
    if (order == 1) {
      cell_dofs_[t] = {tri[0], tri[1], tri[2]};
      continue;
    }
    std::array<int, 3> vi{}, vj{};
    for (int k = 0; k < 3; ++k) {
      vi[k] = tri[k] % nv;
      vj[k] = tri[k] / nv;
    }
    auto lat = [this](int i2, int j2) { return j2 * lattice_ + i2; };
    std::vector<int> dofs(6);
    for (int k = 0; k < 3; ++k) dofs[k] = lat(2 * vi[k], 2 * vj[k]);
    for (int k = 0; k < 3; ++k) {
      const int l = (k + 1) % 3;
      dofs[3 + k] = lat(vi[k] + vi[l], vj[k] + vj[l]);
    }
    cell_dofs_[t] = std::move(dofs);
  }
}

std::vector<char> FunctionSpace::boundary_mask(std::initializer_list<BoundarySide> sides) const {
  std::vector<char> mask(coords_.size(), 0);
  const int last = lattice_ - 1;
  for (int j = 0; j < lattice_; ++j) {
    for (int i = 0; i < lattice_; ++i) {
      bool on = false;
      for (BoundarySide s : sides) {
        switch (s) {
          case BoundarySide::bottom: on |= (j == 0); break;
          case BoundarySide::top: on |= (j == last); break;
          case BoundarySide::left: on |= (i == 0); break;
          case BoundarySide::right: on |= (i == last); break;
        }
      }
      mask[static_cast<std::size_t>(j) * lattice_ + i] = on ? 1 : 0;
    }
  }
  return mask;
}

std::vector<char> FunctionSpace::boundary_mask() const {
  return boundary_mask({BoundarySide::bottom, BoundarySide::right, BoundarySide::top, BoundarySide::left});
}

Eigen::VectorXd FunctionSpace::shape_values(const Eigen::Vector3d& l) const {
  if (order_ == 1) return l;
  Eigen::VectorXd phi(6);
  for (int k = 0; k < 3; ++k) phi[k] = l[k] * (2 * l[k] - 1);
  phi[3] = 4 * l[0] * l[1];
  phi[4] = 4 * l[1] * l[2];
  phi[5] = 4 * l[2] * l[0];
  return phi;
}

std::shared_ptr<const FunctionSpace> build_space(std::shared_ptr<const StructuredMesh> mesh,
                                                 int order) {
  return std::make_shared<const FunctionSpace>(std::move(mesh), order);
}

ScalarField::ScalarField(std::shared_ptr<const FunctionSpace> s, Vec v)
    : space(std::move(s)), values(std::move(v)) {
  if (!space) throw std::invalid_argument("ScalarField: null space");
  if (static_cast<std::size_t>(values.size()) != space->num_dofs())
    throw std::invalid_argument("ScalarField: value count " + std::to_string(values.size()) +
                                " does not match dof count " + std::to_string(space->num_dofs()));
  if (!values.allFinite()) throw std::invalid_argument("ScalarField: nonfinite values");
}

ScalarField::ScalarField(std::shared_ptr<const FunctionSpace> s)
    : ScalarField(s, Vec::Zero(static_cast<Eigen::Index>(s ? s->num_dofs() : 0))) {}

}  // namespace jinv
