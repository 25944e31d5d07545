#include "lod2s/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lod2s/operator.hpp"

namespace lod2s {

const SparseRealMatrix& QuasiInterpolator::component(Component c) const {
  switch (c) {
    case Component::macro: return macro;
    case Component::star: return star;
    default: return incl;
  }
}

const SparseRealMatrix& QuasiInterpolator::prolongation(Component c) const {
  switch (c) {
    case Component::macro: return prolong_macro;
    case Component::star: return prolong_star;
    default: return prolong_incl;
  }
}

namespace {

std::vector<std::vector<int>> children_of(const Triangulation2D& fine, int n_coarse) {
  std::vector<std::vector<int>> ch(n_coarse);
  for (int t = 0; t < fine.num_triangles(); ++t) ch[fine.refinement_parent()[t]].push_back(t);
  return ch;
}

// Oswald(L2 projection) and nodal prolongation for one component.
void build_component(const Triangulation2D& C, const DofMap& dc, const Triangulation2D& F, const DofMap& df,
                     SparseRealMatrix& interp, SparseRealMatrix& prolong) {
  const auto children = children_of(F, C.num_triangles());
  // number of active coarse triangles around every canonical coarse vertex
  std::vector<int> star_count(C.num_vertices(), 0);
  for (int v = 0; v < C.num_vertices(); ++v) {
    if (C.canonical(v) != v) continue;
    for (int T : C.incident(v))
      if (dc.active[T]) ++star_count[v];
  }
  std::vector<Eigen::Triplet<double>> itrip;
  for (int T = 0; T < C.num_triangles(); ++T) {
    if (!dc.active[T]) continue;
    const auto& ctri = C.triangle(T);
    const Eigen::Matrix3d Minv = element_mass<double>(C.area(T)).inverse();
    for (int t : children[T]) {
      if (!df.active[t]) continue;
      const auto& ftri = F.triangle(t);
      Eigen::Matrix3d Lam;  // Lam(j, c) = lambda_j^T at fine vertex c
      for (int c = 0; c < 3; ++c) Lam.col(c) = barycentric(C, T, F.vertex(ftri[c]));
      const Eigen::Matrix3d W = Minv * Lam * element_mass<double>(F.area(t));
      for (int j = 0; j < 3; ++j) {
        const int row = dc.dof(ctri[j]);
        if (row < 0) continue;
        const double avg = 1.0 / star_count[C.canonical(ctri[j])];
        for (int a = 0; a < 3; ++a) {
          const int col = df.dof(ftri[a]);
          if (col >= 0 && W(j, a) != 0.0) itrip.emplace_back(row, col, avg * W(j, a));
        }
      }
    }
  }
  interp.resize(dc.dof_count, df.dof_count);
  interp.setFromTriplets(itrip.begin(), itrip.end());
  interp.prune(1e-14, 1.0);

  std::vector<Eigen::Triplet<double>> ptrip;
  std::vector<char> done(df.dof_count, 0);
  for (int t = 0; t < F.num_triangles(); ++t) {
    if (!df.active[t]) continue;
    const int T = F.refinement_parent()[t];
    const auto& ctri = C.triangle(T);
    for (int v : F.triangle(t)) {
      const int row = df.dof(v);
      if (row < 0 || done[row]) continue;
      done[row] = 1;
      const Eigen::Vector3d lam = barycentric(C, T, F.vertex(v));
      for (int j = 0; j < 3; ++j) {
        const int col = dc.dof(ctri[j]);
        if (col >= 0 && std::abs(lam[j]) > 1e-13) ptrip.emplace_back(row, col, lam[j]);
      }
    }
  }
  prolong.resize(df.dof_count, dc.dof_count);
  prolong.setFromTriplets(ptrip.begin(), ptrip.end());
}

CellField map_cell(const CellField& f, const SparseRealMatrix& A, const SparseRealMatrix& X) {
  const SparseComplexMatrix Ac = A.cast<Complex>();
  const SparseComplexMatrix XT = SparseRealMatrix(X.transpose()).cast<Complex>();
  if (f.identity) return CellField::general(Ac * (f.coeffs * XT));
  return CellField::factored(Ac * f.basis, f.coeffs * XT);
}

}  // namespace

QuasiInterpolator build_interpolator(const TwoScaleSpace& fine, const TwoScaleSpace& coarse) {
  const auto& FG = *fine.macro_mesh;
  const auto& FY = *fine.cell_mesh;
  const auto& CG = *coarse.macro_mesh;
  const auto& CY = *coarse.cell_mesh;
  if (!FG.has_parent() || !FY.has_parent())
    throw ConfigurationError("build_interpolator: fine meshes need refinement parents");
  for (int p : FG.refinement_parent())
    if (p < 0 || p >= CG.num_triangles()) throw ConfigurationError("build_interpolator: macro parent out of range");
  for (int p : FY.refinement_parent())
    if (p < 0 || p >= CY.num_triangles()) throw ConfigurationError("build_interpolator: cell parent out of range");

  QuasiInterpolator I;
  build_component(CG, coarse.macro, FG, fine.macro, I.macro, I.prolong_macro);
  build_component(CY, coarse.star, FY, fine.star, I.star, I.prolong_star);
  build_component(CY, coarse.incl, FY, fine.incl, I.incl, I.prolong_incl);

  std::vector<Eigen::Triplet<double>> avg, agg;
  for (Index i = 0; i < fine.n_x(); ++i) {
    const int t = fine.x_cells[i];
    const int T = FG.refinement_parent()[t];
    const int j = coarse.x_of_triangle[T];
    if (j < 0) throw ConfigurationError("build_interpolator: fine x cell outside coarse Omega");
    avg.emplace_back(j, i, FG.area(t) / CG.area(T));
    agg.emplace_back(j, i, 1.0);
  }
  I.x_average.resize(coarse.n_x(), fine.n_x());
  I.x_average.setFromTriplets(avg.begin(), avg.end());
  I.x_aggregate.resize(coarse.n_x(), fine.n_x());
  I.x_aggregate.setFromTriplets(agg.begin(), agg.end());
  I.x_expand = I.x_aggregate.transpose();
  return I;
}

TwoScaleFunction apply(const QuasiInterpolator& I, const TwoScaleFunction& v) {
  TwoScaleFunction r;
  r.macro = I.macro.cast<Complex>() * v.macro;
  r.star = map_cell(v.star, I.star, I.x_average);
  r.incl = map_cell(v.incl, I.incl, I.x_average);
  return r;
}

TwoScaleFunction embed(const QuasiInterpolator& I, const TwoScaleFunction& coarse) {
  return expand(coarse, I.prolong_macro.cast<Complex>(), I.prolong_star.cast<Complex>(),
                I.prolong_incl.cast<Complex>(), I.x_expand);
}

TwoScaleFunction kernel_projection(const QuasiInterpolator& I, const TwoScaleFunction& v) {
  return v - embed(I, apply(I, v));
}

std::vector<char> refine_mask(const Triangulation2D& fine, std::span<const int> coarse_triangles) {
  if (!fine.has_parent()) throw ConfigurationError("refine_mask: mesh has no refinement parents");
  int n = 0;
  for (int p : fine.refinement_parent()) n = std::max(n, p + 1);
  std::vector<char> coarse(n, 0);
  for (int T : coarse_triangles)
    if (T < n) coarse[T] = 1;
  std::vector<char> mask(fine.num_triangles(), 0);
  for (int t = 0; t < fine.num_triangles(); ++t) mask[t] = coarse[fine.refinement_parent()[t]];
  return mask;
}

std::vector<int> interior_dofs(const Triangulation2D& mesh, const DofMap& dofs, std::span<const char> mask) {
  std::vector<char> inside(dofs.dof_count, 1), seen(dofs.dof_count, 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!dofs.active[t]) continue;
    for (int v : mesh.triangle(t)) {
      const int d = dofs.dof(v);
      if (d < 0) continue;
      seen[d] = 1;
      if (!mask[t]) inside[d] = 0;
    }
  }
  std::vector<int> out;
  for (int d = 0; d < dofs.dof_count; ++d)
    if (seen[d] && inside[d]) out.push_back(d);
  return out;
}

SparseRealMatrix kernel_constraints(const QuasiInterpolator& I, Component c, std::span<const int> fine_dofs) {
  const SparseRealMatrix& A = I.component(c);
  std::vector<int> local(A.cols(), -1);
  for (std::size_t i = 0; i < fine_dofs.size(); ++i) local[fine_dofs[i]] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> row_id(A.rows(), -1);
  int rows = 0;
  // A is column major; collect entries of the selected columns
  for (std::size_t i = 0; i < fine_dofs.size(); ++i) {
    for (SparseRealMatrix::InnerIterator it(A, fine_dofs[i]); it; ++it) {
      if (it.value() == 0.0) continue;
      if (row_id[it.row()] < 0) row_id[it.row()] = 0;
    }
  }
  for (Index r = 0; r < A.rows(); ++r)
    if (row_id[r] == 0) row_id[r] = rows++;
  for (std::size_t i = 0; i < fine_dofs.size(); ++i)
    for (SparseRealMatrix::InnerIterator it(A, fine_dofs[i]); it; ++it)
      if (it.value() != 0.0) trip.emplace_back(row_id[it.row()], static_cast<int>(i), it.value());
  SparseRealMatrix Cm(rows, static_cast<Index>(fine_dofs.size()));
  Cm.setFromTriplets(trip.begin(), trip.end());
  return Cm;
}

namespace {

// per-triangle |v|^2 and |grad v|^2 on the active triangles
void triangle_norms(const Triangulation2D& mesh, const DofMap& dofs, const ComplexVector& v, RealVector& l2,
                    RealVector& h1) {
  l2 = RealVector::Zero(mesh.num_triangles());
  h1 = RealVector::Zero(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!dofs.active[t]) continue;
    const auto& tri = mesh.triangle(t);
    Eigen::Vector3cd u;
    for (int a = 0; a < 3; ++a) u[a] = dofs.dof(tri[a]) >= 0 ? v[dofs.dof(tri[a])] : Complex(0.0);
    const Eigen::Matrix3d K = element_stiffness<double>(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]));
    const Eigen::Matrix3d M = element_mass<double>(mesh.area(t));
    l2[t] = u.dot(M.cast<Complex>() * u).real();
    h1[t] = u.dot(K.cast<Complex>() * u).real();
  }
}

ComplexVector random_nodal(const Triangulation2D& mesh, const DofMap& dofs, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int modes = 3;
  ComplexVector v(dofs.dof_count);
  double a[modes][4];
  for (auto& m : a)
    for (double& x : m) x = n01(rng);
  const double noise = u01(rng);
  for (int d = 0; d < dofs.dof_count; ++d) {
    const Eigen::Vector2d p = mesh.vertex(dofs.dof_to_vertex[d]);
    Complex s = 0.0;
    for (int m = 0; m < modes; ++m) {
      const double arg = 2.0 * std::numbers::pi * ((m + 1) * p.x() * a[m][2] + (m + 1) * p.y() * a[m][3]);
      s += Complex(a[m][0], a[m][1]) * std::cos(arg);
    }
    v[d] = s + noise * Complex(n01(rng), n01(rng));
  }
  return v;
}

double component_constant(const Triangulation2D& C, const DofMap& dc, const Triangulation2D& F, const DofMap& df,
                          const SparseRealMatrix& I, const SparseRealMatrix& P, int samples, std::mt19937_64& rng) {
  if (dc.dof_count == 0 || df.dof_count == 0) return 0.0;
  const auto children = children_of(F, C.num_triangles());
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const ComplexVector v = random_nodal(F, df, rng);
    const ComplexVector Iv = P.cast<Complex>() * (I.cast<Complex>() * v);
    RealVector l2d, h1d, l2i, h1i, l2v, h1v;
    triangle_norms(F, df, v - Iv, l2d, h1d);
    triangle_norms(F, df, Iv, l2i, h1i);
    triangle_norms(F, df, v, l2v, h1v);
    for (int T = 0; T < C.num_triangles(); ++T) {
      if (!dc.active[T]) continue;
      double diff = 0.0, grad_i = 0.0;
      for (int t : children[T]) {
        diff += l2d[t];
        grad_i += h1i[t];
      }
      const int seed[1] = {T};
      const Patch nb = neighborhood(C, seed);
      double grad_v = 0.0;
      for (int K : nb.members)
        if (dc.active[K])
          for (int t : children[K]) grad_v += h1v[t];
      if (grad_v < 1e-28) continue;
      const double ratio = (std::sqrt(diff) / C.diameter(T) + std::sqrt(grad_i)) / std::sqrt(grad_v);
      worst = std::max(worst, ratio);
    }
  }
  return worst;
}

}  // namespace

InterpolationConstants measure_constants(const QuasiInterpolator& I, const TwoScaleSpace& fine,
                                         const TwoScaleSpace& coarse, double k, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InterpolationConstants c;
  c.macro = component_constant(*coarse.macro_mesh, coarse.macro, *fine.macro_mesh, fine.macro, I.macro,
                               I.prolong_macro, samples, rng);
  c.star = component_constant(*coarse.cell_mesh, coarse.star, *fine.cell_mesh, fine.star, I.star, I.prolong_star,
                              samples, rng);
  c.incl = component_constant(*coarse.cell_mesh, coarse.incl, *fine.cell_mesh, fine.incl, I.incl, I.prolong_incl,
                              samples, rng);
  for (int s = 0; s < samples; ++s) {
    const TwoScaleFunction v = random_function(fine, rng());
    const double nv = energy_norm(fine, k, v);
    if (nv <= 0.0) continue;
    c.energy = std::max(c.energy, energy_norm(fine, k, embed(I, apply(I, v))) / nv);
  }
  return c;
}

TwoScaleFunction random_function(const TwoScaleSpace& space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TwoScaleFunction v;
  v.macro = random_nodal(*space.macro_mesh, space.macro, rng);
  ComplexMatrix s(space.n_star(), space.n_x()), d(space.n_incl(), space.n_x());
  for (Index x = 0; x < space.n_x(); ++x) {
    s.col(x) = random_nodal(*space.cell_mesh, space.star, rng);
    d.col(x) = random_nodal(*space.cell_mesh, space.incl, rng);
  }
  v.star = CellField::general(std::move(s));
  v.incl = CellField::general(std::move(d));
  return v;
}

}  // namespace lod2s
