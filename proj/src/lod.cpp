#include "lod2s/lod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace lod2s {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// squared Frobenius norm without densifying factored fields
double field_norm2(const CellField& f) {
  if (f.identity) return f.coeffs.squaredNorm();
  if (f.rank() == 0) return 0.0;
  double s = 0.0;
  for (Index x0 = 0; x0 < f.cols(); x0 += 256) {
    const Index w = std::min<Index>(256, f.cols() - x0);
    s += (f.basis * f.coeffs.middleCols(x0, w)).squaredNorm();
  }
  return s;
}

double norm(const TwoScaleFunction& f) {
  return std::sqrt(f.macro.squaredNorm() + field_norm2(f.star) + field_norm2(f.incl));
}

double max_abs(const CellField& f) {
  if (f.cols() == 0 || f.rows() == 0) return 0.0;
  return f.dense().cwiseAbs().maxCoeff();
}

TwoScaleFunction zero_cells(ComplexVector macro, Index n1, Index n2, Index nx) {
  TwoScaleFunction f;
  f.macro = std::move(macro);
  f.star = CellField::zero(n1, nx);
  f.incl = CellField::zero(n2, nx);
  return f;
}

}  // namespace

std::unique_ptr<Hierarchy> make_hierarchy(const HierarchySpec& spec) {
  if (spec.macro_levels < 0 || spec.cell_levels < 0) throw ConfigurationError("hierarchy: negative refinement level");
  auto CG = std::make_shared<Triangulation2D>(build_structured_mesh(spec.macro, spec.macro_n));
  auto CY = std::make_shared<Triangulation2D>(build_structured_mesh(spec.cell, spec.cell_n));
  auto FG = std::make_shared<Triangulation2D>(refine_uniform(*CG, spec.macro_levels));
  auto FY = std::make_shared<Triangulation2D>(refine_uniform(*CY, spec.cell_levels));
  auto h = std::make_unique<Hierarchy>();
  h->coarse = make_space(CG, CY);
  h->fine = make_space(FG, FY);
  h->interp = build_interpolator(h->fine, h->coarse);
  return h;
}

LodSystem assemble_lod_system(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g,
                              const OperatorBases& bases, int m) {
  LodSystem sys;
  sys.m = m;
  sys.op = build_operator(h.fine, FormCoefficients::form(p), bases);
  const ComplexVector load = bases.test_macro.adjoint() * rhs_vector(h.fine, g);
  sys.rhs = zero_cells(load, sys.op.star.size(), sys.op.incl.size(), sys.op.n_x());
  return sys;
}

SolveReport solve_system(const LodSystem& sys) {
  SolveReport r;
  r.m = sys.m;
  r.dimension = sys.dimension();
  const auto t0 = Clock::now();
  const CondensedSolver solver(sys.op);
  r.solution = solver.solve(sys.rhs);
  r.timing.solve = seconds_since(t0);
  const double fn = norm(sys.rhs);
  const double res = norm(apply(sys.op, r.solution) - sys.rhs);
  r.residual = fn > 0.0 ? res / fn : res;
  return r;
}

SolveReport solve_reference(const TwoScaleSpace& fine, const ProblemParams& p, const BoundaryDatum& g) {
  p.validate();
  const auto t0 = Clock::now();
  LodSystem sys;
  sys.op = build_operator(fine, FormCoefficients::form(p), OperatorBases::identity(fine));
  sys.rhs = zero_cells(rhs_vector(fine, g), fine.n_star(), fine.n_incl(), fine.n_x());
  const double assembly = seconds_since(t0);
  SolveReport r = solve_system(sys);
  r.timing.assembly = assembly;
  r.m = -1;
  return r;
}

SolveReport solve_lod(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g, const CorrectorSet& Q) {
  p.validate();
  const auto t0 = Clock::now();
  const LodSystem sys = assemble_lod_system(h, p, g, lod_bases(h.interp, Q), Q.m);
  const double assembly = seconds_since(t0);
  SolveReport r;
  try {
    r = solve_system(sys);
  } catch (const SolverError& e) {
    throw SolverError(std::string("LOD system not uniquely solvable (") + e.what() +
                      "); increase the oversampling order m");
  }
  r.timing.assembly = assembly;
  return r;
}

LodRun solve_lod(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g, int m, int threads) {
  const auto t0 = Clock::now();
  const CorrectorContext ctx(h.fine, h.coarse, h.interp, p);
  LodRun run;
  run.correctors = build_corrected_test_basis(ctx, m, threads);
  const double tc = seconds_since(t0);
  run.report = solve_lod(h, p, g, run.correctors);
  run.report.timing.correctors = tc;
  if (m >= 0) {
    run.report.diagnostics.overlap_macro = overlap_constant(*h.coarse.macro_mesh, m);
    run.report.diagnostics.overlap_cell = overlap_constant(*h.coarse.cell_mesh, m);
  }
  return run;
}

SolveReport solve_coarse_galerkin(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g) {
  p.validate();
  const LodSystem sys = assemble_lod_system(h, p, g, coarse_bases(h.interp), 0);
  return solve_system(sys);
}

TwoScaleFunction energy_projection(const Hierarchy& h, double k, const TwoScaleFunction& fine) {
  const OperatorBases cb = coarse_bases(h.interp);
  const TwoScaleOperator gram = build_operator(h.fine, FormCoefficients::energy(k), cb);
  const TwoScaleOperator fine_gram = build_operator(h.fine, FormCoefficients::energy(k), OperatorBases::identity(h.fine));
  const TwoScaleFunction rhs =
      restrict_dual(apply(fine_gram, fine), cb.test_macro, cb.test_star, cb.test_incl, cb.x_aggregate);
  return CondensedSolver(gram).solve(rhs);
}

ErrorReport error_energy(const Hierarchy& h, double k, const SolveReport& ref, const SolveReport& coarse) {
  ErrorReport e;
  e.reference = energy_norm(h.fine, k, ref.solution);
  e.error = energy_norm(h.fine, k, ref.solution - embed(h.interp, coarse.solution));
  e.best = energy_norm(h.fine, k, ref.solution - embed(h.interp, energy_projection(h, k, ref.solution)));
  e.ratio = e.best > 0.0 ? e.error / e.best : (e.error > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  return e;
}

OrthogonalityReport galerkin_orthogonality_check(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g,
                                                 const SolveReport& ref, const SolveReport& lod,
                                                 const CorrectorSet& Q) {
  const OperatorBases b = lod_bases(h.interp, Q);
  const TwoScaleOperator B = build_operator(h.fine, FormCoefficients::form(p), OperatorBases::identity(h.fine));
  const TwoScaleFunction defect = restrict_dual(apply(B, ref.solution - embed(h.interp, lod.solution)), b.test_macro,
                                                b.test_star, b.test_incl, b.x_aggregate);
  OrthogonalityReport r;
  r.max_defect = std::max({defect.macro.size() ? defect.macro.cwiseAbs().maxCoeff() : 0.0, max_abs(defect.star),
                           max_abs(defect.incl)});
  r.rhs_norm = (b.test_macro.adjoint() * rhs_vector(h.fine, g)).norm();
  return r;
}

double infsup_estimate(const TwoScaleSpace& fine, const ProblemParams& p, const OperatorBases& bases, Index max_dim) {
  OperatorBases trial = bases, test = bases;
  trial.test_macro = bases.trial_macro;
  trial.test_star = bases.trial_star;
  trial.test_incl = bases.trial_incl;
  test.trial_macro = bases.test_macro;
  test.trial_star = bases.test_star;
  test.trial_incl = bases.test_incl;
  const TwoScaleOperator A = build_operator(fine, FormCoefficients::form(p), bases);
  if (A.dimension() > max_dim) return std::numeric_limits<double>::quiet_NaN();
  const TwoScaleOperator Gu = build_operator(fine, FormCoefficients::energy(p.k), trial);
  const TwoScaleOperator Gp = build_operator(fine, FormCoefficients::energy(p.k), test);
  const SparseComplexMatrix Zu = mean_free_basis(Gu), Zp = mean_free_basis(Gp);
  const SparseComplexMatrix Zp_adj = Zp.adjoint(), Zu_adj = Zu.adjoint();
  const ComplexMatrix Ar = ComplexMatrix(Zp_adj * (materialize(A) * Zu));
  ComplexMatrix Gur = ComplexMatrix(Zu_adj * (materialize(Gu) * Zu));
  ComplexMatrix Gpr = ComplexMatrix(Zp_adj * (materialize(Gp) * Zp));
  // enforce exact hermitian symmetry before the Cholesky factorizations
  Gur = (0.5 * (Gur + Gur.adjoint())).eval();
  Gpr = (0.5 * (Gpr + Gpr.adjoint())).eval();
  return infsup_constant(Ar, Gur, Gpr);
}

SolveDiagnostics resolution_condition(const Hierarchy& h, const ProblemParams& p, const InterpolationConstants& c,
                                      int m) {
  SolveDiagnostics d;
  d.overlap_macro = overlap_constant(*h.coarse.macro_mesh, m);
  d.overlap_cell = overlap_constant(*h.coarse.cell_mesh, m);
  d.resolution_lhs = p.k * (c.macro * std::sqrt(double(d.overlap_macro)) * h.coarse.macro_mesh->mesh_size() +
                            c.incl * std::sqrt(double(d.overlap_cell)) * h.coarse.cell_mesh->mesh_size());
  d.resolution_rhs = std::sqrt(p.c_min() / 2.0);
  d.resolution_ok = d.resolution_lhs <= d.resolution_rhs;
  return d;
}

void write_solution(std::ostream& os, const TwoScaleFunction& u) {
  os << std::setprecision(17);
  for (Index i = 0; i < u.macro.size(); ++i) os << "macro " << i << ' ' << u.macro[i].real() << ' ' << u.macro[i].imag() << '\n';
  const char* names[2] = {"star", "incl"};
  const CellField* fields[2] = {&u.star, &u.incl};
  for (int c = 0; c < 2; ++c) {
    const ComplexMatrix d = fields[c]->dense();
    for (Index x = 0; x < d.cols(); ++x)
      for (Index i = 0; i < d.rows(); ++i)
        os << names[c] << ' ' << x << ' ' << i << ' ' << d(i, x).real() << ' ' << d(i, x).imag() << '\n';
  }
}

void write_field_dump(std::ostream& os, const Triangulation2D& mesh, const DofMap& dofs, const ComplexVector& u,
                      int n) {
  if (n < 1) throw ArgumentError("field dump: grid size must be positive");
  Eigen::Vector2d lo = mesh.vertex(0), hi = mesh.vertex(0);
  for (const auto& v : mesh.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  os << std::setprecision(12);
  int hint = 0;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const Eigen::Vector2d x(lo.x() + (hi.x() - lo.x()) * i / n, lo.y() + (hi.y() - lo.y()) * j / n);
      Complex val(0.0);
      for (int s = 0; s < mesh.num_triangles(); ++s) {
        const int t = (hint + s) % mesh.num_triangles();
        const Eigen::Vector3d lam = barycentric(mesh, t, x);
        if (lam.minCoeff() < -1e-12) continue;
        const auto& tri = mesh.triangle(t);
        for (int a = 0; a < 3; ++a)
          if (dofs.dof(tri[a]) >= 0) val += lam[a] * u[dofs.dof(tri[a])];
        hint = t;
        break;
      }
      os << x.x() << ' ' << x.y() << ' ' << val.real() << ' ' << val.imag() << '\n';
    }
    os << '\n';
  }
}

}  // namespace lod2s
