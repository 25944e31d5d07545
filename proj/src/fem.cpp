#include "lod2s/fem.hpp"

#include <cmath>
#include <ostream>

namespace lod2s {

DofMap build_dofmap(const Triangulation2D& mesh, SpaceKind kind) {
  if (kind == SpaceKind::periodic_zero_mean && !mesh.periodic())
    throw ConfigurationError("build_dofmap: periodic space requested on a non-periodic mesh");
  DofMap d;
  d.kind = kind;
  d.mean_constraint = kind == SpaceKind::periodic_zero_mean;
  d.active.assign(mesh.num_triangles(), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    switch (kind) {
      case SpaceKind::free: d.active[t] = 1; break;
      case SpaceKind::periodic_zero_mean: d.active[t] = mesh.label(t) == Subdomain::outer; break;
      case SpaceKind::zero_trace: d.active[t] = mesh.label(t) == Subdomain::inner; break;
    }
  }
  std::vector<char> touched(mesh.num_vertices(), 0), blocked(mesh.num_vertices(), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int v : mesh.triangle(t)) {
      const int c = mesh.canonical(v);
      if (d.active[t])
        touched[c] = 1;
      else if (kind == SpaceKind::zero_trace)
        blocked[c] = 1;
    }
  std::vector<int> canon_dof(mesh.num_vertices(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.canonical(v) != v || !touched[v] || blocked[v]) continue;
    canon_dof[v] = d.dof_count++;
    d.dof_to_vertex.push_back(v);
  }
  d.vertex_to_dof.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) d.vertex_to_dof[v] = canon_dof[mesh.canonical(v)];
  return d;
}

Eigen::Matrix<double, 2, 3> barycentric_gradients(const Triangulation2D& mesh, int t, double* area) {
  const auto& tri = mesh.triangle(t);
  const Eigen::Vector2d e1 = mesh.vertex(tri[1]) - mesh.vertex(tri[0]);
  const Eigen::Vector2d e2 = mesh.vertex(tri[2]) - mesh.vertex(tri[0]);
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  Eigen::Matrix<double, 2, 3> g;
  g.col(1) << e2.y() / det, -e2.x() / det;
  g.col(2) << -e1.y() / det, e1.x() / det;
  g.col(0) = -g.col(1) - g.col(2);
  if (area) *area = 0.5 * std::abs(det);
  return g;
}

Eigen::Vector3d barycentric(const Triangulation2D& mesh, int t, const Eigen::Vector2d& p) {
  const auto& tri = mesh.triangle(t);
  const Eigen::Vector2d& a = mesh.vertex(tri[0]);
  Eigen::Matrix2d J;
  J.col(0) = mesh.vertex(tri[1]) - a;
  J.col(1) = mesh.vertex(tri[2]) - a;
  const Eigen::Vector2d s = J.partialPivLu().solve(p - a);
  return {1.0 - s.x() - s.y(), s.x(), s.y()};
}

namespace {

template <typename Scalar, typename Local>
SparseMatrix<Scalar> assemble_local(const Triangulation2D& mesh, const DofMap& dofs, std::span<const Scalar> coeff,
                                    Local local) {
  if (coeff.size() != static_cast<std::size_t>(mesh.num_triangles()))
    throw ArgumentError("assembly: one coefficient per triangle required");
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(9 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!dofs.active[t] || coeff[t] == Scalar(0)) continue;
    const auto& tri = mesh.triangle(t);
    const Eigen::Matrix<Scalar, 3, 3> e = local(t, coeff[t]);
    for (int a = 0; a < 3; ++a) {
      const int r = dofs.dof(tri[a]);
      if (r < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int c = dofs.dof(tri[b]);
        if (c >= 0) trip.emplace_back(r, c, e(a, b));
      }
    }
  }
  SparseMatrix<Scalar> A(dofs.dof_count, dofs.dof_count);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

}  // namespace

template <typename Scalar>
SparseMatrix<Scalar> assemble_stiffness(const Triangulation2D& mesh, const DofMap& dofs,
                                        std::span<const Scalar> per_triangle) {
  return assemble_local<Scalar>(mesh, dofs, per_triangle, [&](int t, Scalar c) {
    const auto& tri = mesh.triangle(t);
    return element_stiffness<Scalar>(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]), c);
  });
}

template <typename Scalar>
SparseMatrix<Scalar> assemble_mass(const Triangulation2D& mesh, const DofMap& dofs,
                                   std::span<const Scalar> per_triangle) {
  return assemble_local<Scalar>(mesh, dofs, per_triangle,
                                [&](int t, Scalar c) { return element_mass<Scalar>(mesh.area(t), c); });
}

template SparseMatrix<double> assemble_stiffness<double>(const Triangulation2D&, const DofMap&,
                                                         std::span<const double>);
template SparseMatrix<Complex> assemble_stiffness<Complex>(const Triangulation2D&, const DofMap&,
                                                           std::span<const Complex>);
template SparseMatrix<double> assemble_mass<double>(const Triangulation2D&, const DofMap&, std::span<const double>);
template SparseMatrix<Complex> assemble_mass<Complex>(const Triangulation2D&, const DofMap&, std::span<const Complex>);

std::vector<Complex> per_triangle(const Triangulation2D& mesh, std::array<Complex, 2> coefficient) {
  std::vector<Complex> c(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) c[t] = coefficient[static_cast<int>(mesh.label(t))];
  return c;
}

SparseComplexMatrix assemble_stiffness(const Triangulation2D& mesh, const DofMap& dofs,
                                       std::array<Complex, 2> coefficient) {
  const auto c = per_triangle(mesh, coefficient);
  return assemble_stiffness<Complex>(mesh, dofs, std::span<const Complex>(c));
}

SparseComplexMatrix assemble_mass(const Triangulation2D& mesh, const DofMap& dofs, std::array<Complex, 2> weight) {
  const auto c = per_triangle(mesh, weight);
  return assemble_mass<Complex>(mesh, dofs, std::span<const Complex>(c));
}

SparseRealMatrix assemble_boundary_mass(const Triangulation2D& mesh, const DofMap& dofs,
                                        std::span<const char> triangle_mask) {
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : mesh.boundary_edges()) {
    if (!triangle_mask.empty() && !triangle_mask[e.triangle]) continue;
    if (!dofs.active[e.triangle]) continue;
    const Eigen::Matrix2d m = edge_mass<double>((mesh.vertex(e.a) - mesh.vertex(e.b)).norm());
    const int idx[2] = {dofs.dof(e.a), dofs.dof(e.b)};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        if (idx[a] >= 0 && idx[b] >= 0) trip.emplace_back(idx[a], idx[b], m(a, b));
  }
  SparseRealMatrix B(dofs.dof_count, dofs.dof_count);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

SparseRealMatrix gradient_operator(const Triangulation2D& mesh, const DofMap& dofs, std::span<const int> triangles) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(6 * triangles.size());
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const int t = triangles[i];
    const auto g = barycentric_gradients(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int a = 0; a < 3; ++a) {
      const int c = dofs.dof(tri[a]);
      if (c < 0) continue;
      trip.emplace_back(2 * i, c, g(0, a));
      trip.emplace_back(2 * i + 1, c, g(1, a));
    }
  }
  SparseRealMatrix G(2 * static_cast<Index>(triangles.size()), dofs.dof_count);
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

SparseRealMatrix integral_operator(const Triangulation2D& mesh, const DofMap& dofs, std::span<const int> triangles) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const int t = triangles[i];
    const double third = mesh.area(t) / 3.0;
    for (int v : mesh.triangle(t)) {
      const int c = dofs.dof(v);
      if (c >= 0) trip.emplace_back(i, c, third);
    }
  }
  SparseRealMatrix S(static_cast<Index>(triangles.size()), dofs.dof_count);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

RealVector basis_integrals(const Triangulation2D& mesh, const DofMap& dofs) {
  RealVector m = RealVector::Zero(dofs.dof_count);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!dofs.active[t]) continue;
    for (int v : mesh.triangle(t))
      if (dofs.dof(v) >= 0) m[dofs.dof(v)] += mesh.area(t) / 3.0;
  }
  return m;
}

RealMatrix gradient_integrals(const Triangulation2D& mesh, const DofMap& dofs) {
  RealMatrix G = RealMatrix::Zero(2, dofs.dof_count);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!dofs.active[t]) continue;
    double area = 0.0;
    const auto g = barycentric_gradients(mesh, t, &area);
    const auto& tri = mesh.triangle(t);
    for (int a = 0; a < 3; ++a)
      if (dofs.dof(tri[a]) >= 0) G.col(dofs.dof(tri[a])) += area * g.col(a);
  }
  return G;
}

ComplexVector boundary_load(const Triangulation2D& mesh, const DofMap& dofs, const BoundaryFunction& g,
                            int gauss_points) {
  Eigen::VectorXd x, w;
  switch (gauss_points) {
    case 1:
      x = Eigen::VectorXd::Constant(1, 0.0);
      w = Eigen::VectorXd::Constant(1, 2.0);
      break;
    case 2:
      x = Eigen::Vector2d(-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0));
      w = Eigen::Vector2d(1.0, 1.0);
      break;
    case 4:
      x = Eigen::Vector4d(-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526);
      w = Eigen::Vector4d(0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538);
      break;
    default: {
      // Gauss-Legendre via Golub-Welsch
      const int n = gauss_points;
      if (n < 1) throw ArgumentError("boundary_load: need at least one quadrature point");
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
      for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
      x = es.eigenvalues();
      w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    }
  }
  ComplexVector b = ComplexVector::Zero(dofs.dof_count);
  for (const auto& e : mesh.boundary_edges()) {
    if (!dofs.active[e.triangle]) continue;
    const Eigen::Vector2d p = mesh.vertex(e.a), q = mesh.vertex(e.b);
    const double len = (q - p).norm();
    Eigen::Vector2d n((q - p).y(), -(q - p).x());
    n /= len;
    const auto& tri = mesh.triangle(e.triangle);
    const int opposite = tri[0] != e.a && tri[0] != e.b ? tri[0] : (tri[1] != e.a && tri[1] != e.b ? tri[1] : tri[2]);
    if (n.dot(mesh.vertex(opposite) - p) > 0.0) n = -n;
    Complex ia = 0.0, ib = 0.0;
    for (int i = 0; i < x.size(); ++i) {
      const double s = 0.5 * (x[i] + 1.0);
      const Complex gv = g((1.0 - s) * p + s * q, n) * (0.5 * w[i] * len);
      ia += gv * (1.0 - s);
      ib += gv * s;
    }
    if (dofs.dof(e.a) >= 0) b[dofs.dof(e.a)] += ia;
    if (dofs.dof(e.b) >= 0) b[dofs.dof(e.b)] += ib;
  }
  return b;
}

namespace {

template <typename Rhs>
Rhs solve_impl(const SparseComplexMatrix& A, const Rhs& b, double tolerance) {
  if (A.rows() != A.cols() || A.rows() != b.rows()) throw ArgumentError("solve_sparse: dimension mismatch");
  Eigen::SparseLU<SparseComplexMatrix> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SolverError("solve_sparse: factorization failed (" + lu.lastErrorMessage() + ")");
  Rhs x = lu.solve(b);
  const double bn = b.norm();
  const double res = (A * x - b).norm();
  if (!std::isfinite(res) || res > tolerance * std::max(bn, 1e-300))
    throw SolverError("solve_sparse: relative residual " + std::to_string(bn > 0 ? res / bn : res) +
                      " above tolerance");
  return x;
}

}  // namespace

ComplexVector solve_sparse(const SparseComplexMatrix& A, const ComplexVector& b, double tolerance) {
  if (b.size() == A.rows() && b.norm() == 0.0 && A.rows() > 0) {
    Eigen::SparseLU<SparseComplexMatrix> lu(A);
    if (lu.info() != Eigen::Success) throw SolverError("solve_sparse: factorization failed");
    return ComplexVector::Zero(b.size());
  }
  return solve_impl(A, b, tolerance);
}

ComplexMatrix solve_sparse(const SparseComplexMatrix& A, const ComplexMatrix& b, double tolerance) {
  return solve_impl(A, b, tolerance);
}

void write_coordinate(std::ostream& os, const SparseComplexMatrix& A) {
  os.precision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseComplexMatrix::InnerIterator it(A, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

SparseComplexMatrix sparse_identity(Index n) {
  SparseComplexMatrix I(n, n);
  I.setIdentity();
  return I;
}

SparseComplexMatrix to_complex(const SparseRealMatrix& A) { return A.cast<Complex>(); }

}  // namespace lod2s
