#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "lod2s/mesh.hpp"
#include "lod2s/types.hpp"

namespace lod2s {

/// free: every vertex of the active triangles carries a dof.
/// periodic_zero_mean: Y* part of a periodic cell mesh; identified vertices
///   share a dof and a mean value constraint is recorded.
/// zero_trace: D part of a cell mesh; vertices on the boundary of D carry no dof.
enum class SpaceKind { free, periodic_zero_mean, zero_trace };

struct DofMap {
  SpaceKind kind = SpaceKind::free;
  std::vector<int> vertex_to_dof;    // per mesh vertex, -1 when constrained or inactive
  std::vector<char> active;          // per triangle, 1 when the triangle belongs to the space
  std::vector<int> dof_to_vertex;    // canonical representative of each dof
  int dof_count = 0;
  bool mean_constraint = false;

  int dof(int vertex) const { return vertex_to_dof[vertex]; }
};

/// Dof numbering follows ascending (canonical) vertex index.
DofMap build_dofmap(const Triangulation2D& mesh, SpaceKind kind);

/// Gradients of the barycentric coordinates of triangle t (columns) and its area.
Eigen::Matrix<double, 2, 3> barycentric_gradients(const Triangulation2D& mesh, int t, double* area = nullptr);

/// Barycentric coordinates of point p with respect to triangle t.
Eigen::Vector3d barycentric(const Triangulation2D& mesh, int t, const Eigen::Vector2d& p);

template <typename Scalar = double>
Eigen::Matrix<Scalar, 3, 3> element_stiffness(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                                              const Eigen::Vector2d& p2, Scalar coefficient = Scalar(1)) {
  const Eigen::Vector2d e1 = p1 - p0, e2 = p2 - p0;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  Eigen::Matrix<double, 2, 3> g;
  g.col(1) << e2.y(), -e2.x();
  g.col(2) << -e1.y(), e1.x();
  g.col(1) /= det;
  g.col(2) /= det;
  g.col(0) = -g.col(1) - g.col(2);
  const Eigen::Matrix3d k = 0.5 * std::abs(det) * g.transpose() * g;
  return (k.cast<Scalar>() * coefficient).eval();
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, 3, 3> element_mass(double area, Scalar weight = Scalar(1)) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Constant(1.0);
  m.diagonal().setConstant(2.0);
  return (m.cast<Scalar>() * Scalar(area / 12.0) * weight).eval();
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, 2, 2> edge_mass(double length, Scalar weight = Scalar(1)) {
  Eigen::Matrix2d m;
  m << 2.0, 1.0, 1.0, 2.0;
  return (m.cast<Scalar>() * Scalar(length / 6.0) * weight).eval();
}

/// Stiffness with one coefficient per triangle; triangles inactive in the
/// dof map or with zero coefficient are skipped.
template <typename Scalar>
SparseMatrix<Scalar> assemble_stiffness(const Triangulation2D& mesh, const DofMap& dofs,
                                        std::span<const Scalar> per_triangle);
template <typename Scalar>
SparseMatrix<Scalar> assemble_mass(const Triangulation2D& mesh, const DofMap& dofs,
                                   std::span<const Scalar> per_triangle);

/// Coefficient per subdomain {outer, inner}.
SparseComplexMatrix assemble_stiffness(const Triangulation2D& mesh, const DofMap& dofs,
                                       std::array<Complex, 2> coefficient);
SparseComplexMatrix assemble_mass(const Triangulation2D& mesh, const DofMap& dofs, std::array<Complex, 2> weight);

/// Edge mass summed over boundary edges whose owning triangle is selected by
/// `triangle_mask` (all boundary edges when the mask is empty).
SparseRealMatrix assemble_boundary_mass(const Triangulation2D& mesh, const DofMap& dofs,
                                        std::span<const char> triangle_mask = {});

/// Per-subdomain per-triangle coefficient vector.
std::vector<Complex> per_triangle(const Triangulation2D& mesh, std::array<Complex, 2> coefficient);

/// Row block 2t..2t+1 holds the gradient of a P1 function on the t-th
/// selected triangle; `triangles` selects the rows in order.
SparseRealMatrix gradient_operator(const Triangulation2D& mesh, const DofMap& dofs, std::span<const int> triangles);

/// Row t holds the integrals of the basis functions over the t-th selected triangle.
SparseRealMatrix integral_operator(const Triangulation2D& mesh, const DofMap& dofs, std::span<const int> triangles);

/// Integral of every basis function over the active triangles.
RealVector basis_integrals(const Triangulation2D& mesh, const DofMap& dofs);

/// Integral over the active triangles of the basis function gradients (2 x n).
RealMatrix gradient_integrals(const Triangulation2D& mesh, const DofMap& dofs);

/// Load (g, phi_i) over the selected boundary edges with 4-point Gauss quadrature
/// per edge; g receives the point and the outward unit normal.
using BoundaryFunction = std::function<Complex(const Eigen::Vector2d&, const Eigen::Vector2d&)>;
ComplexVector boundary_load(const Triangulation2D& mesh, const DofMap& dofs, const BoundaryFunction& g,
                            int gauss_points = 4);

/// Sparse direct solve; throws SolverError when the factorization fails or the
/// relative residual exceeds `tolerance`.
ComplexVector solve_sparse(const SparseComplexMatrix& A, const ComplexVector& b, double tolerance = 1e-10);
ComplexMatrix solve_sparse(const SparseComplexMatrix& A, const ComplexMatrix& b, double tolerance = 1e-10);

/// `row col re im` per nonzero entry.
void write_coordinate(std::ostream& os, const SparseComplexMatrix& A);

/// Sparse identity and selection helpers.
SparseComplexMatrix sparse_identity(Index n);
SparseComplexMatrix to_complex(const SparseRealMatrix& A);

}  // namespace lod2s
