#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "jinv/linalg.hpp"
#include "jinv/mesh.hpp"

namespace jinv {

using ElementGradients = Eigen::Matrix2Xd;  // column t = gradient on triangle t

/// Exact local mass matrix of triangle t (3x3 or 6x6).
Eigen::MatrixXd local_mass(const FunctionSpace& space, std::size_t t);

/// Exact local stiffness matrix (unit weight) of triangle t.
Eigen::MatrixXd local_stiffness(const FunctionSpace& space, std::size_t t);

/// Exact local load vector for the constant source 1.
Eigen::VectorXd local_load(const FunctionSpace& space, std::size_t t);

SparseMatrix assemble_mass(const FunctionSpace& space);

/// sum_t weight[t] * K_t. Weights must be finite and positive.
SparseMatrix assemble_weighted_stiffness(const FunctionSpace& space, std::span<const double> weight);

/// Assembled load vector for f = 1.
Vec assemble_unit_load(const FunctionSpace& space);

/// Row i evaluates a field at points[i] by shape-function interpolation.
SparseMatrix point_eval_operator(const FunctionSpace& space, const std::vector<Point>& points);

/// Constant gradient of an order-1 field on every triangle.
ElementGradients element_gradients(const ScalarField& field);
ElementGradients element_gradients(const FunctionSpace& p1_space, const Vec& values);

ScalarField interpolate(const std::function<double(const Point&)>& f,
                        std::shared_ptr<const FunctionSpace> space);

/// Per-triangle mean of the three vertex values of an order-1 field.
Vec centroid_values(const FunctionSpace& p1_space, const Vec& values);

/// Transpose of centroid_values: scatters per-triangle values w[t]/3 to the vertices.
Vec scatter_centroid(const FunctionSpace& p1_space, const Vec& per_triangle);

}  // namespace jinv
