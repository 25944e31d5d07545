#include <sstream>

#include "common.hpp"

using namespace lod2s;

namespace {

ProblemParams params(double k) {
  ProblemParams p;
  p.k = k;
  return p;
}

}  // namespace

TEST_CASE("hierarchy construction") {
  HierarchySpec s;
  s.macro_n = 4;
  s.cell_n = 4;
  s.macro_levels = -1;
  CHECK_THROWS_AS(make_hierarchy(s), ConfigurationError);
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  CHECK(h->fine.macro_mesh->num_triangles() == 4 * h->coarse.macro_mesh->num_triangles());
  CHECK(h->fine.n_x() == 4 * h->coarse.n_x());
}

TEST_CASE("without refinement LOD, coarse Galerkin and reference coincide") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 0);
  const ProblemParams p = params(3.0);
  const BoundaryDatum g = BoundaryDatum::plane_wave(p.k);
  const SolveReport ref = solve_reference(h->fine, p, g);
  CHECK(ref.residual < 1e-12);
  const LodRun run = solve_lod(*h, p, g, -1);
  const SolveReport cg = solve_coarse_galerkin(*h, p, g);
  const ErrorReport e = error_energy(*h, p.k, ref, run.report);
  CHECK(e.error <= 1e-10 * e.reference);
  CHECK(error_energy(*h, p.k, ref, cg).error <= 1e-10 * e.reference);
}

TEST_CASE("LOD solve on a small hierarchy") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const ProblemParams p = params(4.0);
  const BoundaryDatum g = BoundaryDatum::plane_wave(p.k);
  const SolveReport ref = solve_reference(h->fine, p, g);
  const LodRun run = solve_lod(*h, p, g, 2);
  CHECK(run.report.residual < 1e-10);
  CHECK(run.report.m == 2);
  CHECK(run.report.dimension == h->coarse.dimension());
  CHECK(run.report.diagnostics.overlap_macro == overlap_constant(*h->coarse.macro_mesh, 2));

  const ErrorReport e = error_energy(*h, p.k, ref, run.report);
  CHECK(e.best <= e.error * (1 + 1e-12));
  CHECK(e.ratio < 3.0);
  CHECK(e.error < e.reference);

  const OrthogonalityReport o = galerkin_orthogonality_check(*h, p, g, ref, run.report, run.correctors);
  CHECK(o.rhs_norm > 0.0);
  CHECK(o.max_defect <= 1e-8 * o.rhs_norm);
}

TEST_CASE("LOD system dimension does not depend on m") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const ProblemParams p = params(2.0);
  const BoundaryDatum g = BoundaryDatum::plane_wave(p.k);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, p);
  for (int m : {0, 1, 3}) {
    const CorrectorSet Q = build_corrected_test_basis(ctx, m);
    CHECK(assemble_lod_system(*h, p, g, lod_bases(h->interp, Q), m).dimension() == h->coarse.dimension());
  }
}

TEST_CASE("energy projection reproduces coarse functions") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  std::mt19937_64 rng(6);
  auto c = lod2s::testing::random_coarse(h->coarse, rng);
  // the Y* mean is a normalization; compare mean free representatives
  ComplexMatrix s = c.star.dense();
  const ComplexVector m = h->coarse.mean1.cast<Complex>();
  for (Index x = 0; x < s.cols(); ++x) s.col(x) -= m * (m.transpose() * s.col(x))(0) / m.squaredNorm();
  c.star = CellField::general(s);
  const auto back = energy_projection(*h, 2.0, embed(h->interp, c));
  CHECK(lod2s::testing::max_diff(back, c) < 1e-9);
}

TEST_CASE("inf-sup estimate and resolution condition") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const ProblemParams p = params(2.0);
  const double beta = infsup_estimate(h->fine, p, coarse_bases(h->interp));
  CHECK(std::isfinite(beta));
  CHECK(beta > 0.0);
  CHECK(beta <= 2.0);
  CHECK(std::isnan(infsup_estimate(h->fine, p, OperatorBases::identity(h->fine), 10)));

  InterpolationConstants c;
  c.macro = c.incl = 1.0;
  const SolveDiagnostics d = resolution_condition(*h, p, c, 1);
  CHECK(d.resolution_rhs == doctest::Approx(std::sqrt(0.5)));
  CHECK(d.resolution_lhs > 0.0);
  CHECK(d.resolution_ok == (d.resolution_lhs <= d.resolution_rhs));
}

TEST_CASE("solution and field export") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  TwoScaleFunction u = TwoScaleFunction::zero(h->coarse);
  u.macro.setConstant(Complex(1.0, -2.0));
  std::ostringstream os;
  write_solution(os, u);
  std::istringstream is(os.str());
  std::string kind;
  Index i = 0;
  double re = 0, im = 0;
  is >> kind >> i >> re >> im;
  CHECK(kind == "macro");
  CHECK(re == 1.0);
  CHECK(im == -2.0);

  std::ostringstream dump;
  write_field_dump(dump, *h->coarse.macro_mesh, h->coarse.macro, u.macro, 4);
  std::istringstream ds(dump.str());
  std::string line;
  int values = 0, blanks = 0;
  while (std::getline(ds, line)) {
    if (line.empty()) {
      ++blanks;
      continue;
    }
    std::istringstream ls(line);
    double x, y;
    ls >> x >> y >> re >> im;
    CHECK(re == doctest::Approx(1.0));
    CHECK(im == doctest::Approx(-2.0));
    ++values;
  }
  CHECK(values == 25);
  CHECK(blanks == 5);
  CHECK_THROWS_AS(write_field_dump(dump, *h->coarse.macro_mesh, h->coarse.macro, u.macro, 0), ArgumentError);
}
