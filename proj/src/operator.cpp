#include "lod2s/operator.hpp"

#include <cmath>

namespace lod2s {

namespace {

SparseRealMatrix kron_identity(const SparseRealMatrix& X, Index r) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(X.nonZeros() * r);
  for (int k = 0; k < X.outerSize(); ++k)
    for (SparseRealMatrix::InnerIterator it(X, k); it; ++it)
      for (Index a = 0; a < r; ++a) trip.emplace_back(r * it.row() + a, r * it.col() + a, it.value());
  SparseRealMatrix K(X.rows() * r, X.cols() * r);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

// blockdiag(w_0 B, w_1 B, ...) for a dense block B
SparseComplexMatrix block_diagonal(const ComplexMatrix& B, const RealVector& w) {
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(B.size() * w.size());
  for (Index j = 0; j < w.size(); ++j)
    for (Index c = 0; c < B.cols(); ++c)
      for (Index r = 0; r < B.rows(); ++r)
        if (B(r, c) != Complex(0.0)) trip.emplace_back(j * B.rows() + r, j * B.cols() + c, w[j] * B(r, c));
  SparseComplexMatrix D(B.rows() * w.size(), B.cols() * w.size());
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

SparseComplexMatrix block_diagonal(const SparseComplexMatrix& B, const RealVector& w) {
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(B.nonZeros() * w.size());
  for (Index j = 0; j < w.size(); ++j)
    for (int k = 0; k < B.outerSize(); ++k)
      for (SparseComplexMatrix::InnerIterator it(B, k); it; ++it)
        trip.emplace_back(j * B.rows() + it.row(), j * B.cols() + it.col(), w[j] * it.value());
  SparseComplexMatrix D(B.rows() * w.size(), B.cols() * w.size());
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

ComplexMatrix reshape(const ComplexVector& v, Index rows, Index cols) {
  return Eigen::Map<const ComplexMatrix>(v.data(), rows, cols);
}

ComplexVector vec(const ComplexMatrix& m) { return Eigen::Map<const ComplexVector>(m.data(), m.size()); }

}  // namespace

OperatorBases OperatorBases::identity(const TwoScaleSpace& space) {
  OperatorBases b;
  b.test_macro = b.trial_macro = sparse_identity(space.n_macro());
  b.test_star = b.trial_star = sparse_identity(space.n_star());
  b.test_incl = b.trial_incl = sparse_identity(space.n_incl());
  b.x_aggregate.resize(space.n_x(), space.n_x());
  b.x_aggregate.setIdentity();
  return b;
}

TwoScaleOperator build_operator(const TwoScaleSpace& s, const FormCoefficients& c, const OperatorBases& b) {
  if (b.test_macro.rows() != s.n_macro() || b.trial_macro.rows() != s.n_macro() ||
      b.test_star.rows() != s.n_star() || b.trial_star.rows() != s.n_star() || b.test_incl.rows() != s.n_incl() ||
      b.trial_incl.rows() != s.n_incl() || b.x_aggregate.cols() != s.n_x() ||
      b.test_macro.cols() != b.trial_macro.cols() || b.test_star.cols() != b.trial_star.cols() ||
      b.test_incl.cols() != b.trial_incl.cols())
    throw ArgumentError("build_operator: bases do not match the space");
  TwoScaleOperator op;
  op.weights = b.x_aggregate * s.x_area;

  const SparseComplexMatrix A =
      (c.coupled_grad * s.vol_star) * s.K_inner.cast<Complex>() +
      (c.outer_grad_total * s.vol_cell + c.outer_grad_star * s.vol_star) * s.K_outer.cast<Complex>() +
      (c.mass * s.vol_cell) * s.M.cast<Complex>() + (c.robin * s.vol_cell) * s.R.cast<Complex>();
  const SparseComplexMatrix test_macro_adj = b.test_macro.adjoint();
  op.macro = test_macro_adj * (A * b.trial_macro);

  // gradient moments of every system x cell: sum over fine cells of |t| grad
  RealVector w2(2 * s.n_x());
  for (Index x = 0; x < s.n_x(); ++x) w2[2 * x] = w2[2 * x + 1] = s.x_area[x];
  const SparseRealMatrix grad_w = w2.asDiagonal() * s.grad;
  const SparseComplexMatrix V1 = (kron_identity(b.x_aggregate, 2) * grad_w).cast<Complex>();
  const SparseComplexMatrix V2 = (b.x_aggregate * s.xmass).cast<Complex>();

  {
    CellCoupling& st = op.star;
    const SparseComplexMatrix test_adj = b.test_star.adjoint();
    st.K = c.coupled_grad * (test_adj * (s.K1.cast<Complex>() * b.trial_star));
    st.C = c.coupled_grad * (test_adj * ComplexMatrix(s.G1.transpose().cast<Complex>()));
    st.R = c.coupled_grad * (ComplexMatrix(s.G1.cast<Complex>()) * b.trial_star);
    if (s.star.mean_constraint) st.border = b.trial_star.transpose() * s.mean1.cast<Complex>();
    st.V = V1 * b.trial_macro;
    st.L = SparseComplexMatrix(V1 * b.test_macro).adjoint();
  }
  {
    CellCoupling& in = op.incl;
    const SparseComplexMatrix test_adj = b.test_incl.adjoint();
    const SparseComplexMatrix K2 = c.incl_grad * s.K2.cast<Complex>() + c.mass * s.M2.cast<Complex>();
    in.K = test_adj * (K2 * b.trial_incl);
    in.C = c.mass * (test_adj * ComplexVector(s.m2.cast<Complex>()));
    in.R = c.mass * (ComplexMatrix(s.m2.transpose().cast<Complex>()) * b.trial_incl);
    in.V = V2 * b.trial_macro;
    in.L = SparseComplexMatrix(V2 * b.test_macro).adjoint();
  }
  return op;
}

namespace {

CellField apply_cell(const CellCoupling& c, const RealVector& w, const ComplexVector& v_macro, const CellField& v) {
  const Index nx = w.size();
  const ComplexMatrix W = reshape(c.V * v_macro, c.rank(), nx);
  if (v.identity) return CellField::general(c.C * W + (c.K * v.coeffs) * w.asDiagonal());
  ComplexMatrix basis(c.size(), c.rank() + v.rank());
  basis << c.C, c.K * v.basis;
  ComplexMatrix coeffs(c.rank() + v.rank(), nx);
  coeffs << W, v.coeffs * w.asDiagonal();
  return CellField::factored(std::move(basis), std::move(coeffs));
}

}  // namespace

TwoScaleFunction apply(const TwoScaleOperator& op, const TwoScaleFunction& v) {
  if (v.macro.size() != op.n_macro() || v.star.rows() != op.star.size() || v.incl.rows() != op.incl.size() ||
      v.star.cols() != op.n_x() || v.incl.cols() != op.n_x())
    throw ArgumentError("apply: function does not match the operator");
  TwoScaleFunction d;
  d.macro = op.macro * v.macro;
  if (op.n_x() > 0) {
    d.macro += op.star.L * vec(v.star.left(op.star.R)) + op.incl.L * vec(v.incl.left(op.incl.R));
  }
  d.star = apply_cell(op.star, op.weights, v.macro, v.star);
  d.incl = apply_cell(op.incl, op.weights, v.macro, v.incl);
  return d;
}

namespace {

CellField restrict_cell(const CellField& f, const SparseComplexMatrix& test, const SparseComplexMatrix& aggT) {
  const SparseComplexMatrix adj = test.adjoint();
  if (f.identity) return CellField::general(adj * (f.coeffs * aggT));
  return CellField::factored(adj * f.basis, f.coeffs * aggT);
}

CellField expand_cell(const CellField& f, const SparseComplexMatrix& basis, const SparseComplexMatrix& expT) {
  if (f.identity) return CellField::general(basis * (f.coeffs * expT));
  return CellField::factored(basis * f.basis, f.coeffs * expT);
}

}  // namespace

TwoScaleFunction restrict_dual(const TwoScaleFunction& dual, const SparseComplexMatrix& test_macro,
                               const SparseComplexMatrix& test_star, const SparseComplexMatrix& test_incl,
                               const SparseRealMatrix& x_aggregate) {
  const SparseComplexMatrix aggT = SparseRealMatrix(x_aggregate.transpose()).cast<Complex>();
  TwoScaleFunction r;
  r.macro = test_macro.adjoint() * dual.macro;
  r.star = restrict_cell(dual.star, test_star, aggT);
  r.incl = restrict_cell(dual.incl, test_incl, aggT);
  return r;
}

TwoScaleFunction expand(const TwoScaleFunction& coarse, const SparseComplexMatrix& macro,
                        const SparseComplexMatrix& star, const SparseComplexMatrix& incl,
                        const SparseRealMatrix& x_expand) {
  const SparseComplexMatrix expT = SparseRealMatrix(x_expand.transpose()).cast<Complex>();
  TwoScaleFunction f;
  f.macro = macro * coarse.macro;
  f.star = expand_cell(coarse.star, star, expT);
  f.incl = expand_cell(coarse.incl, incl, expT);
  return f;
}

CondensedSolver::CondensedSolver(const TwoScaleOperator& op) : op_(&op) {
  auto factor = [&](const CellCoupling& c, CellFactor& f) {
    f.n = c.size();
    if (f.n == 0) return;
    f.border = c.border.size() > 0;
    SparseComplexMatrix Kaug;
    if (f.border) {
      std::vector<Eigen::Triplet<Complex>> trip;
      trip.reserve(c.K.nonZeros() + 2 * f.n);
      for (int k = 0; k < c.K.outerSize(); ++k)
        for (SparseComplexMatrix::InnerIterator it(c.K, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
      for (Index i = 0; i < f.n; ++i) {
        if (c.border[i] == Complex(0.0)) continue;
        trip.emplace_back(i, f.n, c.border[i]);
        trip.emplace_back(f.n, i, c.border[i]);
      }
      Kaug.resize(f.n + 1, f.n + 1);
      Kaug.setFromTriplets(trip.begin(), trip.end());
    } else {
      Kaug = c.K;
    }
    Kaug.makeCompressed();
    f.lu = std::make_shared<Eigen::SparseLU<SparseComplexMatrix>>();
    f.lu->compute(Kaug);
    if (f.lu->info() != Eigen::Success)
      throw SolverError("condensation: singular cell block (" + f.lu->lastErrorMessage() + ")");
    f.XC = cell_solve(f, c.C);
  };
  factor(op.star, star_);
  factor(op.incl, incl_);

  schur_ = op.macro;
  RealVector inv_w = op.weights.cwiseInverse();
  auto reduce = [&](const CellCoupling& c, const CellFactor& f) {
    if (f.n == 0 || c.rank() == 0 || op.n_x() == 0) return;
    const ComplexMatrix S = c.R * f.XC;
    const SparseComplexMatrix D = block_diagonal(S, inv_w);
    schur_ -= SparseComplexMatrix(c.L * D) * c.V;
  };
  reduce(op.star, star_);
  reduce(op.incl, incl_);
  schur_.prune(Complex(0.0));
  schur_.makeCompressed();
  schur_lu_.compute(schur_);
  if (schur_lu_.info() != Eigen::Success)
    throw SolverError("condensation: singular Schur complement (" + schur_lu_.lastErrorMessage() + ")");
}

ComplexMatrix CondensedSolver::cell_solve(const CellFactor& f, const ComplexMatrix& rhs) const {
  if (!f.border) return f.lu->solve(rhs);
  ComplexMatrix aug = ComplexMatrix::Zero(f.n + 1, rhs.cols());
  aug.topRows(f.n) = rhs;
  return ComplexMatrix(f.lu->solve(aug)).topRows(f.n);
}

void CondensedSolver::reduce_rhs(const CellCoupling& c, const CellFactor& f, const CellField* rhs,
                                 ComplexVector& F) const {
  if (!rhs || f.n == 0 || c.rank() == 0 || rhs->cols() == 0) return;
  if (!rhs->identity && rhs->rank() == 0) return;
  const RealVector inv_w = op_->weights.cwiseInverse();
  ComplexMatrix M;
  if (rhs->identity)
    M = (c.R * cell_solve(f, rhs->coeffs)) * inv_w.asDiagonal();
  else
    M = (c.R * cell_solve(f, rhs->basis)) * (rhs->coeffs * inv_w.asDiagonal());
  F -= c.L * vec(M);
}

CellField CondensedSolver::recover(const CellCoupling& c, const CellFactor& f, const ComplexVector& u_macro,
                                   const CellField* rhs) const {
  const Index nx = op_->n_x();
  if (f.n == 0) return CellField::zero(0, nx);
  const RealVector inv_w = op_->weights.cwiseInverse();
  const ComplexMatrix W = (c.rank() > 0 ? reshape(c.V * u_macro, c.rank(), nx) : ComplexMatrix::Zero(0, nx)) *
                          inv_w.asDiagonal();
  const bool has_rhs = rhs && (rhs->identity || rhs->rank() > 0);
  if (!has_rhs) return CellField::factored(f.XC, -W);
  if (rhs->identity) return CellField::general(cell_solve(f, rhs->coeffs) * inv_w.asDiagonal() - f.XC * W);
  const ComplexMatrix Y = cell_solve(f, rhs->basis);
  ComplexMatrix basis(f.n, Y.cols() + f.XC.cols());
  basis << Y, f.XC;
  ComplexMatrix coeffs(Y.cols() + f.XC.cols(), nx);
  coeffs << rhs->coeffs * inv_w.asDiagonal(), -W;
  return CellField::factored(std::move(basis), std::move(coeffs));
}

TwoScaleFunction CondensedSolver::solve(const ComplexVector& f_macro, const CellField* f_star,
                                        const CellField* f_incl) const {
  if (f_macro.size() != op_->n_macro()) throw ArgumentError("condensed solve: macro rhs size mismatch");
  ComplexVector F = f_macro;
  reduce_rhs(op_->star, star_, f_star, F);
  reduce_rhs(op_->incl, incl_, f_incl, F);
  TwoScaleFunction u;
  u.macro = schur_lu_.solve(F);
  const double fn = F.norm();
  const double res = (schur_ * u.macro - F).norm();
  if (!std::isfinite(res) || res > 1e-8 * std::max(fn, 1e-300))
    throw SolverError("condensed solve: Schur residual " + std::to_string(fn > 0 ? res / fn : res));
  u.star = recover(op_->star, star_, u.macro, f_star);
  u.incl = recover(op_->incl, incl_, u.macro, f_incl);
  return u;
}

TwoScaleFunction CondensedSolver::solve(const TwoScaleFunction& f) const { return solve(f.macro, &f.star, &f.incl); }

SparseComplexMatrix materialize(const TwoScaleOperator& op) {
  const Index nM = op.n_macro(), nX = op.n_x(), n1 = op.star.size(), n2 = op.incl.size();
  const Index N = op.dimension();
  const RealVector ones = RealVector::Ones(nX);
  std::vector<Eigen::Triplet<Complex>> trip;
  auto add = [&](const SparseComplexMatrix& B, Index r0, Index c0) {
    for (int k = 0; k < B.outerSize(); ++k)
      for (SparseComplexMatrix::InnerIterator it(B, k); it; ++it)
        trip.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  add(op.macro, 0, 0);
  Index offset = nM;
  for (const CellCoupling* c : {&op.star, &op.incl}) {
    if (c->size() > 0 && nX > 0) {
      if (c->rank() > 0) {
        add(SparseComplexMatrix(c->L * block_diagonal(c->R, ones)), 0, offset);
        add(SparseComplexMatrix(block_diagonal(c->C, ones) * c->V), offset, 0);
      }
      add(block_diagonal(c->K, op.weights), offset, offset);
    }
    offset += nX * c->size();
  }
  (void)n1;
  (void)n2;
  SparseComplexMatrix A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SparseComplexMatrix mean_free_basis(const TwoScaleOperator& op) {
  const Index nM = op.n_macro(), nX = op.n_x(), n1 = op.star.size(), n2 = op.incl.size();
  const bool border = op.star.border.size() > 0 && n1 > 0;
  const Index cols = nM + nX * ((border ? n1 - 1 : n1) + n2);
  std::vector<Eigen::Triplet<Complex>> trip;
  for (Index i = 0; i < nM; ++i) trip.emplace_back(i, i, 1.0);
  Index col = nM;
  Index pivot = 0;
  if (border) op.star.border.cwiseAbs().maxCoeff(&pivot);
  for (Index x = 0; x < nX; ++x) {
    const Index r0 = nM + x * n1;
    for (Index a = 0; a < n1; ++a) {
      if (border && a == pivot) continue;
      trip.emplace_back(r0 + a, col, 1.0);
      if (border) trip.emplace_back(r0 + pivot, col, -op.star.border[a] / op.star.border[pivot]);
      ++col;
    }
  }
  for (Index x = 0; x < nX; ++x)
    for (Index a = 0; a < n2; ++a) trip.emplace_back(nM + nX * n1 + x * n2 + a, col++, 1.0);
  SparseComplexMatrix Z(op.dimension(), cols);
  Z.setFromTriplets(trip.begin(), trip.end());
  return Z;
}

ComplexVector flatten(const TwoScaleFunction& v) {
  const ComplexMatrix s = v.star.dense(), d = v.incl.dense();
  ComplexVector out(v.macro.size() + s.size() + d.size());
  out << v.macro, vec(s), vec(d);
  return out;
}

double infsup_constant(const ComplexMatrix& A, const ComplexMatrix& G_trial, const ComplexMatrix& G_test) {
  if (A.rows() != G_test.rows() || A.cols() != G_trial.rows()) throw ArgumentError("infsup: dimension mismatch");
  Eigen::LLT<ComplexMatrix> lu(G_trial), lp(G_test);
  if (lu.info() != Eigen::Success || lp.info() != Eigen::Success)
    throw ConfigurationError("infsup: Gram matrix not positive definite");
  // sigma_min of Lp^-1 A Lu^-H
  ComplexMatrix M = lp.matrixL().solve(A);
  M = lu.matrixL().solve(M.adjoint()).adjoint();
  Eigen::BDCSVD<ComplexMatrix> svd(M);
  return svd.singularValues().minCoeff();
}

}  // namespace lod2s
