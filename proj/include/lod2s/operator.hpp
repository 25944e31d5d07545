#pragma once

#include <memory>

#include "lod2s/two_scale.hpp"

namespace lod2s {

/// Test and trial bases expressed in the dofs of a (fine) two-scale space,
/// together with the aggregation of fine x cells into the x cells of the
/// system. Cell basis functions are constant in x on every system x cell.
struct OperatorBases {
  SparseComplexMatrix test_macro, trial_macro;  // n_macro(fine) x n_M
  SparseComplexMatrix test_star, trial_star;    // n_star(fine) x n_1
  SparseComplexMatrix test_incl, trial_incl;    // n_incl(fine) x n_2
  SparseRealMatrix x_aggregate;                 // n_X x n_x(fine), 0/1 entries

  /// Nodal bases of the space itself.
  static OperatorBases identity(const TwoScaleSpace& space);
};

/// Cell block of a two-scale system. Per system x cell j the cell block is
/// w_j * K, the coupling to the macro unknowns factors through a thin rank:
/// macro rows receive L_j * R, cell rows receive C * V_j.
struct CellCoupling {
  SparseComplexMatrix K;  // n x n
  ComplexMatrix C;        // n x r
  ComplexMatrix R;        // r x n
  ComplexVector border;   // trial mean values; empty without mean constraint
  SparseComplexMatrix V;  // (r n_X) x n_M, rows r j .. r j + r - 1 belong to cell j
  SparseComplexMatrix L;  // n_M x (r n_X)

  Index size() const { return K.rows(); }
  Index rank() const { return C.cols(); }
};

struct TwoScaleOperator {
  SparseComplexMatrix macro;
  CellCoupling star, incl;
  RealVector weights;  // area of every system x cell

  Index n_macro() const { return macro.rows(); }
  Index n_x() const { return weights.size(); }
  /// Number of unknowns (mean constraints excluded).
  Index dimension() const { return n_macro() + n_x() * (star.size() + incl.size()); }
};

/// Matrix of the form with coefficients `c` between the given bases:
/// entry (i, j) = form(trial_j, test_i).
TwoScaleOperator build_operator(const TwoScaleSpace& space, const FormCoefficients& c, const OperatorBases& bases);

/// Dual vector A v for v in trial coordinates; the result lives in test coordinates.
TwoScaleFunction apply(const TwoScaleOperator& op, const TwoScaleFunction& v);

/// Dual of a fine space tested against coarse bases: (psi_i^H d) for every test function.
TwoScaleFunction restrict_dual(const TwoScaleFunction& dual, const SparseComplexMatrix& test_macro,
                               const SparseComplexMatrix& test_star, const SparseComplexMatrix& test_incl,
                               const SparseRealMatrix& x_aggregate);

/// Fine representation of a function given in trial coordinates.
TwoScaleFunction expand(const TwoScaleFunction& coarse, const SparseComplexMatrix& macro,
                        const SparseComplexMatrix& star, const SparseComplexMatrix& incl,
                        const SparseRealMatrix& x_expand);

/// Static condensation of the cell unknowns: one factorization per cell
/// block, then a sparse Schur complement on the macro unknowns.
class CondensedSolver {
 public:
  explicit CondensedSolver(const TwoScaleOperator& op);

  /// Solves A u = f; the cell parts of f may be empty (zero).
  TwoScaleFunction solve(const ComplexVector& f_macro, const CellField* f_star = nullptr,
                         const CellField* f_incl = nullptr) const;
  TwoScaleFunction solve(const TwoScaleFunction& f) const;

  const SparseComplexMatrix& schur() const { return schur_; }

 private:
  struct CellFactor {
    std::shared_ptr<Eigen::SparseLU<SparseComplexMatrix>> lu;
    ComplexMatrix XC;  // n x r
    bool border = false;
    Index n = 0;
  };
  ComplexMatrix cell_solve(const CellFactor& f, const ComplexMatrix& rhs) const;
  CellField recover(const CellCoupling& c, const CellFactor& f, const ComplexVector& u_macro,
                    const CellField* rhs) const;
  void reduce_rhs(const CellCoupling& c, const CellFactor& f, const CellField* rhs, ComplexVector& F) const;

  const TwoScaleOperator* op_;
  CellFactor star_, incl_;
  SparseComplexMatrix schur_;
  Eigen::SparseLU<SparseComplexMatrix> schur_lu_;
};

/// Fully assembled matrix (macro, then cell blocks x-major), for small problems.
SparseComplexMatrix materialize(const TwoScaleOperator& op);
/// Basis (columns) of the unknowns satisfying the mean constraint in every x cell.
SparseComplexMatrix mean_free_basis(const TwoScaleOperator& op);
/// Flatten a function in operator coordinates to the materialized ordering.
ComplexVector flatten(const TwoScaleFunction& v);

/// Discrete inf-sup constant min_v sup_psi |psi^H A v| / (|v|_Gu |psi|_Gpsi)
/// for dense-sized problems. Throws ConfigurationError when a Gram matrix is
/// not positive definite.
double infsup_constant(const ComplexMatrix& A, const ComplexMatrix& G_trial, const ComplexMatrix& G_test);

}  // namespace lod2s
