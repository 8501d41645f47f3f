#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace jinv {

using Vec = Eigen::VectorXd;
using Point = Eigen::Vector2d;

enum class BoundarySide { bottom, right, top, left };

struct BoundaryEdge {
  std::array<int, 2> vertices;
  BoundarySide side;
};

/// Uniform triangulation of the unit square: N x N squares, each cut in half
/// along the bottom-left to top-right diagonal.
///
/// Vertex (i, j) has index j*(N+1)+i and sits at (i/N, j/N). Square (i, j)
/// yields triangles 2*(j*N+i) = (v00, v10, v11) and 2*(j*N+i)+1 =
/// (v00, v11, v01), both counter-clockwise.
class StructuredMesh {
 public:
  explicit StructuredMesh(int n);

  int n() const { return n_; }
  double h() const { return 1.0 / n_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

  double triangle_area(std::size_t t) const;
  Point centroid(std::size_t t) const;

  /// Triangle containing p (ties resolved towards the lower-left square and
  /// the lower triangle). Throws std::invalid_argument outside [0,1]^2.
  std::size_t locate(const Point& p) const;

  /// Barycentric coordinates of p with respect to triangle t.
  Eigen::Vector3d barycentric(std::size_t t, const Point& p) const;

  /// Gradients of the three barycentric coordinates on triangle t, as the
  /// columns of a 2x3 matrix.
  Eigen::Matrix<double, 2, 3> barycentric_gradients(std::size_t t) const;

 private:
  int n_;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_;
};

std::shared_ptr<const StructuredMesh> build_mesh(int n);

/// Continuous Lagrange space of order 1 or 2 on a StructuredMesh.
///
/// Order-2 dofs live on the (2N+1)^2 half-step lattice, so dof (I, J) has
/// index J*(2N+1)+I; order-1 dofs coincide with mesh vertices. Local dof
/// order per triangle is (v0, v1, v2, e01, e12, e20) for order 2.
class FunctionSpace {
 public:
  FunctionSpace(std::shared_ptr<const StructuredMesh> mesh, int order);

  const StructuredMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const StructuredMesh> mesh_ptr() const { return mesh_; }
  int order() const { return order_; }
  std::size_t num_dofs() const { return coords_.size(); }
  int dofs_per_cell() const { return order_ == 1 ? 3 : 6; }
  const std::vector<Point>& dof_coordinates() const { return coords_; }
  const std::vector<int>& cell_dofs(std::size_t t) const { return cell_dofs_[t]; }

  /// Dofs lying on the given boundary sides.
  std::vector<char> boundary_mask(std::initializer_list<BoundarySide> sides) const;
  std::vector<char> boundary_mask() const;

  /// Values of the local shape functions at barycentric point lambda.
  Eigen::VectorXd shape_values(const Eigen::Vector3d& lambda) const;

 private:
  std::shared_ptr<const StructuredMesh> mesh_;
  int order_;
  int lattice_;  // dofs per side
  std::vector<Point> coords_;
  std::vector<std::vector<int>> cell_dofs_;
};

std::shared_ptr<const FunctionSpace> build_space(std::shared_ptr<const StructuredMesh> mesh,
                                                 int order);

/// Coefficient vector over a FunctionSpace.
struct ScalarField {
  std::shared_ptr<const FunctionSpace> space;
  Vec values;

  ScalarField() = default;
  ScalarField(std::shared_ptr<const FunctionSpace> s, Vec v);
  explicit ScalarField(std::shared_ptr<const FunctionSpace> s);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

}  // namespace jinv
