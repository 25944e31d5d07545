#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "lod2s/interpolation.hpp"
#include "lod2s/operator.hpp"

namespace lod2s {

/// Correction of the three local basis functions of one coarse triangle.
/// Macro seeds are triangles of the coarse G mesh, cell seeds triangles of
/// the coarse Y mesh (in Y* or D). Cell corrections are x-independent.
struct ElementCorrection {
  Component kind = Component::macro;
  int triangle = 0;
  int m = 0;                          // -1 for the idealized corrector
  std::vector<int> patch;             // coarse triangles
  std::array<int, 3> coarse_dofs{};   // -1 where the vertex carries no dof
  std::vector<int> dofs;              // fine dofs of the patch space
  ComplexMatrix values;               // dofs.size() x 3

  /// Full fine coefficient vector of the correction of local basis function j.
  ComplexVector expand(int j, Index n_fine) const;
};

struct CorrectorSet {
  int m = 0;
  Index fine_dofs[3] = {0, 0, 0};
  Index coarse_dofs[3] = {0, 0, 0};
  std::vector<ElementCorrection> elements;
  SparseComplexMatrix Q[3];  // fine x coarse per component, column i = Q(lambda_i)

  const SparseComplexMatrix& matrix(Component c) const { return Q[static_cast<int>(c)]; }
  /// Rebuilds Q from the element records.
  void assemble();
};

/// Shared read-only data of the corrector problems: the fine component
/// matrices of the decoupled forms and the patch machinery.
///
/// macro: (w, 0, 0) against (v, 0, 0), i.e. coefficient eps_e^-1 |Y*| in
///        Omega and |Y| outside, mass -k^2 |Y| and Robin -ik |Y|.
/// star:  eps_e^-1 grad_y on Y*, the x weight |T| cancels.
/// incl:  eps_i^-1 grad_y - k^2 on D.
class CorrectorContext {
 public:
  CorrectorContext(const TwoScaleSpace& fine, const TwoScaleSpace& coarse, const QuasiInterpolator& I,
                   const ProblemParams& p);

  const TwoScaleSpace& fine() const { return *fine_; }
  const TwoScaleSpace& coarse() const { return *coarse_; }
  const QuasiInterpolator& interpolator() const { return *I_; }
  const ProblemParams& params() const { return p_; }

  const SparseComplexMatrix& matrix(Component c) const { return A_[static_cast<int>(c)]; }
  const Triangulation2D& coarse_mesh(Component c) const;
  const Triangulation2D& fine_mesh(Component c) const;
  const DofMap& coarse_dofmap(Component c) const;
  const DofMap& fine_dofmap(Component c) const;
  /// Fine children of every coarse triangle.
  const std::vector<int>& children(Component c, int T) const;

  /// Seeds that need a correction: active coarse triangles of the component.
  std::vector<int> seeds(Component c) const;

  /// Localized correction on the m-th order patch; m < 0 selects the whole
  /// domain (idealized corrector). Throws CorrectorError when the saddle
  /// point system is singular or exceeds `size_guard` unknowns.
  ElementCorrection solve(Component c, int T, int m, std::size_t size_guard = 200000) const;

 private:
  ComplexMatrix element_rhs(Component c, int T, const std::vector<int>& local) const;
  Eigen::Matrix3cd local_matrix(Component c, int t) const;

  const TwoScaleSpace* fine_;
  const TwoScaleSpace* coarse_;
  const QuasiInterpolator* I_;
  ProblemParams p_;
  SparseComplexMatrix A_[3];
  std::vector<std::vector<int>> children_[3];
  std::vector<std::vector<int>> boundary_edges_of_;  // fine macro triangle -> boundary edge ids
};

/// All element corrections of oversampling order m (m < 0: idealized),
/// computed in parallel with a deterministic merge.
CorrectorSet build_corrected_test_basis(const CorrectorContext& ctx, int m, int threads = 1);

/// Test (P - Q) and trial (P) bases of the Petrov-Galerkin system.
OperatorBases lod_bases(const QuasiInterpolator& I, const CorrectorSet& Q);
/// Uncorrected coarse Galerkin bases (test = trial = P).
OperatorBases coarse_bases(const QuasiInterpolator& I);

/// Tail seminorms of the idealized correction of local basis function j of
/// seed T outside the m-th patches, and the localization errors of the
/// m-th order correction, for m = 0..m_max. Cell seminorms are per unit x area.
struct DecayProfile {
  Component kind = Component::macro;
  int triangle = 0;
  int local = 0;
  std::vector<double> tail;
  std::vector<double> localization_error;
  std::vector<char> saturated;  // patch of order m covers the whole mesh
};

DecayProfile corrector_decay_profile(const CorrectorContext& ctx, Component c, int T, int local, int m_max);

/// Least-squares fit log(tail_m) = a + m log(beta) over the positive tails
/// of unsaturated patches. r2 is the coefficient of determination.
struct DecayFit {
  double beta = 1.0;
  double r2 = 0.0;
  int points = 0;
};

DecayFit fit_decay(const std::vector<double>& tail, const std::vector<char>& saturated = {});

/// max(2, ceil(log k / |log beta|)).
int auto_oversampling(double k, double beta);

/// Text cache: header, then one record per element correction.
void write_correctors(std::ostream& os, const CorrectorSet& set);
CorrectorSet read_correctors(std::istream& is);

/// Runs fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace lod2s
