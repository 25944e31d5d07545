#pragma once

#include <iosfwd>
#include <memory>

#include "lod2s/correctors.hpp"

namespace lod2s {

/// Nested coarse and fine two-scale spaces with their interpolation. Kept
/// behind a unique_ptr by callers that build corrector contexts, which hold
/// references into it.
struct Hierarchy {
  TwoScaleSpace coarse;
  TwoScaleSpace fine;
  QuasiInterpolator interp;
};

struct HierarchySpec {
  SquareDomain macro = SquareDomain::macro();
  SquareDomain cell = SquareDomain::cell();
  int macro_n = 8;       // coarse subdivisions of G
  int cell_n = 8;        // coarse subdivisions of Y
  int macro_levels = 1;  // uniform refinements from coarse to fine
  int cell_levels = 1;
};

std::unique_ptr<Hierarchy> make_hierarchy(const HierarchySpec& spec);

struct Timing {
  double correctors = 0.0;
  double assembly = 0.0;
  double solve = 0.0;
};

struct SolveDiagnostics {
  int overlap_macro = 0;  // C_ol of the oversampling patches on the coarse meshes
  int overlap_cell = 0;
  double resolution_lhs = 0.0;  // k (C_I sqrt(C_ol,G) H_c + C_I^D sqrt(C_ol,Y) h_c)
  double resolution_rhs = 0.0;  // sqrt(C_min / 2)
  bool resolution_ok = true;
};

struct SolveReport {
  TwoScaleFunction solution;  // coarse (LOD) or fine (reference) coordinates
  double residual = 0.0;      // relative residual of the linear system
  Index dimension = 0;
  int m = 0;
  Timing timing;
  SolveDiagnostics diagnostics;
};

/// Petrov-Galerkin system: entries B(lambda_j, (1 - Q_m) lambda_i) and the
/// load (g, (1 - Q_m) lambda_i), which only sees the macro trace.
struct LodSystem {
  TwoScaleOperator op;
  TwoScaleFunction rhs;
  int m = 0;

  Index dimension() const { return op.dimension(); }
};

LodSystem assemble_lod_system(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g,
                              const OperatorBases& bases, int m);

/// Solves a system by condensation and reports the relative residual.
SolveReport solve_system(const LodSystem& sys);

/// Direct Galerkin solution on the fine space.
SolveReport solve_reference(const TwoScaleSpace& fine, const ProblemParams& p, const BoundaryDatum& g);

/// LOD solve with precomputed correctors.
SolveReport solve_lod(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g, const CorrectorSet& Q);

/// LOD solve computing the correctors of order m (m < 0: idealized).
struct LodRun {
  SolveReport report;
  CorrectorSet correctors;
};
LodRun solve_lod(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g, int m, int threads = 1);

/// Uncorrected coarse Galerkin solution (test = trial = coarse space).
SolveReport solve_coarse_galerkin(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g);

struct ErrorReport {
  double error = 0.0;       // |u_ref - u_coarse|_e
  double best = 0.0;        // min over the coarse space
  double ratio = 0.0;       // error / best
  double reference = 0.0;   // |u_ref|_e
};

/// Energy error of a coarse solution against the fine reference and the
/// best approximation by (.,.)_e-orthogonal projection onto the coarse space.
ErrorReport error_energy(const Hierarchy& h, double k, const SolveReport& ref, const SolveReport& coarse);

/// Best approximation of a fine function in the coarse space (coarse coordinates).
TwoScaleFunction energy_projection(const Hierarchy& h, double k, const TwoScaleFunction& fine);

/// max over the corrected test basis of |B(u_ref - u_lod, (1 - Q) lambda)|
/// and the Euclidean norm of the load vector for scaling.
struct OrthogonalityReport {
  double max_defect = 0.0;
  double rhs_norm = 0.0;
};
OrthogonalityReport galerkin_orthogonality_check(const Hierarchy& h, const ProblemParams& p, const BoundaryDatum& g,
                                                 const SolveReport& ref, const SolveReport& lod,
                                                 const CorrectorSet& Q);

/// Discrete inf-sup constant of the form between the given bases in the
/// energy geometry; returns NaN when the dense problem would exceed max_dim.
double infsup_estimate(const TwoScaleSpace& fine, const ProblemParams& p, const OperatorBases& bases,
                       Index max_dim = 4000);

/// Resolution condition with measured constants.
SolveDiagnostics resolution_condition(const Hierarchy& h, const ProblemParams& p, const InterpolationConstants& c,
                                      int m);

/// `kind [x] dof re im` per coefficient; cell fields are written densely.
void write_solution(std::ostream& os, const TwoScaleFunction& u);
/// Macro component sampled on an (n+1) x (n+1) grid of G: `x y re im`,
/// one blank line per grid row (gnuplot splot layout).
void write_field_dump(std::ostream& os, const Triangulation2D& mesh, const DofMap& dofs, const ComplexVector& u,
                      int n);

}  // namespace lod2s
