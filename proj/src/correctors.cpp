#include "lod2s/correctors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace lod2s {

ComplexVector ElementCorrection::expand(int j, Index n_fine) const {
  ComplexVector v = ComplexVector::Zero(n_fine);
  if (values.cols() == 0) return v;
  for (std::size_t r = 0; r < dofs.size(); ++r) v[dofs[r]] = values(static_cast<Index>(r), j);
  return v;
}

void CorrectorSet::assemble() {
  std::vector<Eigen::Triplet<Complex>> trip[3];
  for (const auto& e : elements) {
    const int c = static_cast<int>(e.kind);
    for (int j = 0; j < 3; ++j) {
      if (e.coarse_dofs[j] < 0 || e.values.cols() == 0) continue;
      for (std::size_t r = 0; r < e.dofs.size(); ++r) {
        const Complex v = e.values(static_cast<Index>(r), j);
        if (v != Complex(0.0)) trip[c].emplace_back(e.dofs[r], e.coarse_dofs[j], v);
      }
    }
  }
  for (int c = 0; c < 3; ++c) {
    Q[c].resize(fine_dofs[c], coarse_dofs[c]);
    Q[c].setFromTriplets(trip[c].begin(), trip[c].end());
  }
}

CorrectorContext::CorrectorContext(const TwoScaleSpace& fine, const TwoScaleSpace& coarse,
                                   const QuasiInterpolator& I, const ProblemParams& p)
    : fine_(&fine), coarse_(&coarse), I_(&I), p_(p) {
  p_.validate();
  const Complex ie = p.inv_eps_e(), ii = p.inv_eps_i();
  const Complex k2(p.k * p.k, 0.0);
  const auto& FG = *fine.macro_mesh;
  const auto& FY = *fine.cell_mesh;

  A_[0] = assemble_stiffness(FG, fine.macro, {Complex(fine.vol_cell), ie * fine.vol_star}) +
          assemble_mass(FG, fine.macro, {-k2 * fine.vol_cell, -k2 * fine.vol_cell}) +
          Complex(0.0, -p.k * fine.vol_cell) * assemble_boundary_mass(FG, fine.macro).cast<Complex>();
  A_[1] = assemble_stiffness(FY, fine.star, {ie, Complex(0.0)});
  A_[2] = assemble_stiffness(FY, fine.incl, {Complex(0.0), ii}) +
          assemble_mass(FY, fine.incl, {Complex(0.0), -k2});

  for (int c = 0; c < 3; ++c) {
    const auto comp = static_cast<Component>(c);
    const auto& F = fine_mesh(comp);
    children_[c].assign(coarse_mesh(comp).num_triangles(), {});
    for (int t = 0; t < F.num_triangles(); ++t) children_[c][F.refinement_parent()[t]].push_back(t);
  }
  boundary_edges_of_.assign(FG.num_triangles(), {});
  for (std::size_t e = 0; e < FG.boundary_edges().size(); ++e)
    boundary_edges_of_[FG.boundary_edges()[e].triangle].push_back(static_cast<int>(e));
}

const Triangulation2D& CorrectorContext::coarse_mesh(Component c) const {
  return c == Component::macro ? *coarse_->macro_mesh : *coarse_->cell_mesh;
}
const Triangulation2D& CorrectorContext::fine_mesh(Component c) const {
  return c == Component::macro ? *fine_->macro_mesh : *fine_->cell_mesh;
}
const DofMap& CorrectorContext::coarse_dofmap(Component c) const {
  switch (c) {
    case Component::macro: return coarse_->macro;
    case Component::star: return coarse_->star;
    default: return coarse_->incl;
  }
}
const DofMap& CorrectorContext::fine_dofmap(Component c) const {
  switch (c) {
    case Component::macro: return fine_->macro;
    case Component::star: return fine_->star;
    default: return fine_->incl;
  }
}
const std::vector<int>& CorrectorContext::children(Component c, int T) const {
  return children_[static_cast<int>(c)][T];
}

std::vector<int> CorrectorContext::seeds(Component c) const {
  const auto& dc = coarse_dofmap(c);
  std::vector<int> s;
  for (int T = 0; T < static_cast<int>(dc.active.size()); ++T)
    if (dc.active[T]) s.push_back(T);
  return s;
}

Eigen::Matrix3cd CorrectorContext::local_matrix(Component c, int t) const {
  const auto& F = fine_mesh(c);
  const auto& tri = F.triangle(t);
  const Eigen::Matrix3d K = element_stiffness<double>(F.vertex(tri[0]), F.vertex(tri[1]), F.vertex(tri[2]));
  const Eigen::Matrix3d M = element_mass<double>(F.area(t));
  const double k2 = p_.k * p_.k;
  Eigen::Matrix3cd E;
  switch (c) {
    case Component::macro: {
      const Complex ck = F.label(t) == Subdomain::inner ? p_.inv_eps_e() * fine_->vol_star : Complex(fine_->vol_cell);
      E = ck * K.cast<Complex>() - Complex(k2 * fine_->vol_cell) * M.cast<Complex>();
      for (int e : boundary_edges_of_[t]) {
        const auto& be = F.boundary_edges()[e];
        const Eigen::Matrix2d R = edge_mass<double>((F.vertex(be.a) - F.vertex(be.b)).norm());
        int la = 0, lb = 0;
        for (int a = 0; a < 3; ++a) {
          if (tri[a] == be.a) la = a;
          if (tri[a] == be.b) lb = a;
        }
        const int l[2] = {la, lb};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) E(l[a], l[b]) += Complex(0.0, -p_.k * fine_->vol_cell) * R(a, b);
      }
      break;
    }
    case Component::star:
      E = p_.inv_eps_e() * K.cast<Complex>();
      break;
    default:
      E = p_.inv_eps_i() * K.cast<Complex>() - Complex(k2) * M.cast<Complex>();
  }
  return E;
}

ComplexMatrix CorrectorContext::element_rhs(Component c, int T, const std::vector<int>& local) const {
  const auto& C = coarse_mesh(c);
  const auto& F = fine_mesh(c);
  const auto& dc = coarse_dofmap(c);
  const auto& df = fine_dofmap(c);
  const auto& ctri = C.triangle(T);
  Index n = 0;
  for (int v : local) n = std::max<Index>(n, v + 1);
  ComplexMatrix rhs = ComplexMatrix::Zero(n, 3);
  for (int t : children(c, T)) {
    if (!df.active[t]) continue;
    const auto& tri = F.triangle(t);
    const Eigen::Matrix3cd E = local_matrix(c, t);
    Eigen::Matrix3d Lam;  // Lam(b, j): lambda_j at fine vertex b
    for (int b = 0; b < 3; ++b) {
      Lam.row(b) = barycentric(C, T, F.vertex(tri[b])).transpose();
      if (df.dof(tri[b]) < 0) Lam.row(b).setZero();
    }
    const Eigen::Matrix3cd EL = E * Lam.cast<Complex>();
    for (int a = 0; a < 3; ++a) {
      const int d = df.dof(tri[a]);
      if (d < 0 || local[d] < 0) continue;
      for (int j = 0; j < 3; ++j)
        if (dc.dof(ctri[j]) >= 0) rhs(local[d], j) += EL(a, j);
    }
  }
  return rhs;
}

namespace {

// Drops linearly dependent constraint rows (pivoted QR of the transpose);
// very large systems are left untouched.
SparseRealMatrix independent_rows(const SparseRealMatrix& C) {
  if (C.rows() == 0 || static_cast<double>(C.rows()) * static_cast<double>(C.cols()) > 5e7) return C;
  const RealMatrix Ct = RealMatrix(C).transpose();
  Eigen::ColPivHouseholderQR<RealMatrix> qr(Ct);
  qr.setThreshold(1e-10);
  const Index rank = qr.rank();
  if (rank == C.rows()) return C;
  std::vector<int> keep;
  for (Index i = 0; i < rank; ++i) keep.push_back(static_cast<int>(qr.colsPermutation().indices()[i]));
  std::sort(keep.begin(), keep.end());
  std::vector<Eigen::Triplet<double>> trip;
  const SparseRealMatrix T = C.transpose();
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (SparseRealMatrix::InnerIterator it(T, keep[i]); it; ++it) trip.emplace_back(static_cast<int>(i), it.row(), it.value());
  SparseRealMatrix out(static_cast<Index>(keep.size()), C.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace

ElementCorrection CorrectorContext::solve(Component c, int T, int m, std::size_t size_guard) const {
  const auto& C = coarse_mesh(c);
  const auto& F = fine_mesh(c);
  const auto& dc = coarse_dofmap(c);
  const auto& df = fine_dofmap(c);
  if (T < 0 || T >= C.num_triangles() || !dc.active[T]) throw ArgumentError("corrector: seed is not an active triangle");

  ElementCorrection e;
  e.kind = c;
  e.triangle = T;
  e.m = m;
  if (m < 0) {
    e.patch = seeds(c);
  } else {
    const int seed[1] = {T};
    e.patch = patch(C, seed, m).members;
    std::erase_if(e.patch, [&](int S) { return !dc.active[S]; });
  }
  for (int j = 0; j < 3; ++j) e.coarse_dofs[j] = dc.dof(C.triangle(T)[j]);
  e.dofs = interior_dofs(F, df, refine_mask(F, e.patch));
  const Index n = static_cast<Index>(e.dofs.size());
  if (n == 0) return e;

  std::vector<int> local(df.dof_count, -1);
  for (Index i = 0; i < n; ++i) local[e.dofs[i]] = static_cast<int>(i);
  const ComplexMatrix rhs = element_rhs(c, T, local);
  if (rhs.cwiseAbs().maxCoeff() == 0.0) {
    e.values = ComplexMatrix::Zero(n, 3);
    return e;
  }
  SparseRealMatrix Cm = kernel_constraints(*I_, c, e.dofs);
  Cm = independent_rows(Cm);
  const Index r = Cm.rows();
  if (r >= n) {  // the patch kernel is trivial
    e.values = ComplexMatrix::Zero(n, 3);
    return e;
  }
  if (static_cast<std::size_t>(n + r) > size_guard) {
    std::ostringstream msg;
    msg << "corrector: " << n + r << " unknowns exceed the size guard " << size_guard
        << "; use a localized corrector (smaller m) or coarser fine meshes";
    throw CorrectorError(msg.str());
  }

  const SparseComplexMatrix& A = matrix(c);
  std::vector<Eigen::Triplet<Complex>> trip;
  for (Index i = 0; i < n; ++i)
    for (SparseComplexMatrix::InnerIterator it(A, e.dofs[i]); it; ++it)
      if (local[it.row()] >= 0) trip.emplace_back(local[it.row()], i, it.value());
  for (int k = 0; k < Cm.outerSize(); ++k)
    for (SparseRealMatrix::InnerIterator it(Cm, k); it; ++it) {
      trip.emplace_back(n + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n + it.row(), it.value());
    }
  SparseComplexMatrix S(n + r, n + r);
  S.setFromTriplets(trip.begin(), trip.end());
  ComplexMatrix b = ComplexMatrix::Zero(n + r, 3);
  b.topRows(n) = rhs;
  ComplexMatrix y;
  try {
    y = solve_sparse(S, b, 1e-9);
  } catch (const SolverError& err) {
    std::ostringstream msg;
    msg << "corrector: singular saddle point system for seed " << T << " (component " << static_cast<int>(c)
        << ", m = " << m << ", " << e.patch.size() << " patch triangles, " << n << " dofs, " << r
        << " constraints): " << err.what();
    throw CorrectorError(msg.str());
  }
  // the correction sits in the conjugated slot of the form
  e.values = y.topRows(n).conjugate();
  return e;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

CorrectorSet build_corrected_test_basis(const CorrectorContext& ctx, int m, int threads) {
  CorrectorSet set;
  set.m = m;
  std::vector<std::pair<Component, int>> jobs;
  for (int c = 0; c < 3; ++c) {
    const auto comp = static_cast<Component>(c);
    set.fine_dofs[c] = ctx.fine_dofmap(comp).dof_count;
    set.coarse_dofs[c] = ctx.coarse_dofmap(comp).dof_count;
    for (int T : ctx.seeds(comp)) jobs.emplace_back(comp, T);
  }
  set.elements.resize(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), threads,
               [&](int i) { set.elements[i] = ctx.solve(jobs[i].first, jobs[i].second, m); });
  set.assemble();
  return set;
}

OperatorBases lod_bases(const QuasiInterpolator& I, const CorrectorSet& Q) {
  OperatorBases b = coarse_bases(I);
  b.test_macro = b.trial_macro - Q.matrix(Component::macro);
  b.test_star = b.trial_star - Q.matrix(Component::star);
  b.test_incl = b.trial_incl - Q.matrix(Component::incl);
  return b;
}

OperatorBases coarse_bases(const QuasiInterpolator& I) {
  OperatorBases b;
  b.trial_macro = b.test_macro = I.prolong_macro.cast<Complex>();
  b.trial_star = b.test_star = I.prolong_star.cast<Complex>();
  b.trial_incl = b.test_incl = I.prolong_incl.cast<Complex>();
  b.x_aggregate = I.x_aggregate;
  return b;
}

namespace {

// squared gradient seminorm per fine triangle of the component
RealVector triangle_seminorms(const CorrectorContext& ctx, Component c, const ComplexVector& u) {
  const auto& F = ctx.fine_mesh(c);
  const auto& df = ctx.fine_dofmap(c);
  const double w = c == Component::macro ? ctx.fine().vol_star : 1.0;
  RealVector s = RealVector::Zero(F.num_triangles());
  for (int t = 0; t < F.num_triangles(); ++t) {
    if (!df.active[t]) continue;
    const auto& tri = F.triangle(t);
    Eigen::Vector3cd x;
    for (int a = 0; a < 3; ++a) x[a] = df.dof(tri[a]) >= 0 ? u[df.dof(tri[a])] : Complex(0.0);
    const Eigen::Matrix3d K = element_stiffness<double>(F.vertex(tri[0]), F.vertex(tri[1]), F.vertex(tri[2]));
    s[t] = w * x.dot(K.cast<Complex>() * x).real();
  }
  return s;
}

}  // namespace

DecayProfile corrector_decay_profile(const CorrectorContext& ctx, Component c, int T, int local, int m_max) {
  if (local < 0 || local > 2) throw ArgumentError("decay profile: local basis index must be 0, 1 or 2");
  DecayProfile d;
  d.kind = c;
  d.triangle = T;
  d.local = local;
  const auto& F = ctx.fine_mesh(c);
  const auto& df = ctx.fine_dofmap(c);
  const Index nf = df.dof_count;
  const ComplexVector ideal = ctx.solve(c, T, -1).expand(local, nf);
  const RealVector per = triangle_seminorms(ctx, c, ideal);
  for (int m = 0; m <= m_max; ++m) {
    const int seed[1] = {T};
    const auto members = patch(ctx.coarse_mesh(c), seed, m).members;
    const auto mask = refine_mask(F, members);
    double tail = 0.0;
    bool saturated = true;
    for (int t = 0; t < F.num_triangles(); ++t) {
      if (!df.active[t] || mask[t]) continue;
      saturated = false;
      tail += per[t];
    }
    d.tail.push_back(std::sqrt(tail));
    d.saturated.push_back(saturated ? 1 : 0);
    const ComplexVector loc = ctx.solve(c, T, m).expand(local, nf);
    d.localization_error.push_back(std::sqrt(triangle_seminorms(ctx, c, ideal - loc).sum()));
  }
  return d;
}

DecayFit fit_decay(const std::vector<double>& tail, const std::vector<char>& saturated) {
  double top = 0.0;
  for (double t : tail) top = std::max(top, t);
  std::vector<double> xs, ys;
  for (std::size_t m = 0; m < tail.size(); ++m) {
    if (!saturated.empty() && saturated[m]) continue;
    if (!(tail[m] > 1e-13 * top) || tail[m] <= 0.0) continue;
    xs.push_back(static_cast<double>(m));
    ys.push_back(std::log(tail[m]));
  }
  DecayFit f;
  f.points = static_cast<int>(xs.size());
  if (xs.size() < 2) return f;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  f.beta = std::exp(slope);
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

int auto_oversampling(double k, double beta) {
  if (!(beta > 0.0) || beta >= 1.0) throw ArgumentError("auto_oversampling: beta must lie in (0, 1)");
  if (k <= 1.0) return 2;
  return std::max(2, static_cast<int>(std::ceil(std::log(k) / std::abs(std::log(beta)))));
}

void write_correctors(std::ostream& os, const CorrectorSet& set) {
  os << std::setprecision(17);
  os << "correctors m " << set.m << " fine " << set.fine_dofs[0] << ' ' << set.fine_dofs[1] << ' '
     << set.fine_dofs[2] << " coarse " << set.coarse_dofs[0] << ' ' << set.coarse_dofs[1] << ' '
     << set.coarse_dofs[2] << " elements " << set.elements.size() << '\n';
  for (const auto& e : set.elements) {
    os << "element " << static_cast<int>(e.kind) << ' ' << e.triangle << ' ' << e.m << ' ' << e.patch.size() << ' '
       << e.dofs.size() << ' ' << e.values.cols() << '\n';
    for (int T : e.patch) os << T << ' ';
    os << '\n' << e.coarse_dofs[0] << ' ' << e.coarse_dofs[1] << ' ' << e.coarse_dofs[2] << '\n';
    for (int d : e.dofs) os << d << ' ';
    os << '\n';
    for (Index r = 0; r < e.values.rows(); ++r) {
      for (Index j = 0; j < e.values.cols(); ++j) os << e.values(r, j).real() << ' ' << e.values(r, j).imag() << ' ';
      os << '\n';
    }
  }
}

CorrectorSet read_correctors(std::istream& is) {
  auto expect = [&](const char* word) {
    std::string w;
    if (!(is >> w) || w != word) throw ConfigurationError(std::string("corrector cache: expected '") + word + "'");
  };
  CorrectorSet set;
  std::size_t count = 0;
  expect("correctors");
  expect("m");
  is >> set.m;
  expect("fine");
  is >> set.fine_dofs[0] >> set.fine_dofs[1] >> set.fine_dofs[2];
  expect("coarse");
  is >> set.coarse_dofs[0] >> set.coarse_dofs[1] >> set.coarse_dofs[2];
  expect("elements");
  is >> count;
  if (!is) throw ConfigurationError("corrector cache: malformed header");
  set.elements.resize(count);
  for (auto& e : set.elements) {
    expect("element");
    int kind = 0;
    std::size_t np = 0, nd = 0;
    Index cols = 0;
    is >> kind >> e.triangle >> e.m >> np >> nd >> cols;
    if (!is || kind < 0 || kind > 2) throw ConfigurationError("corrector cache: malformed element record");
    e.kind = static_cast<Component>(kind);
    e.patch.resize(np);
    for (int& T : e.patch) is >> T;
    is >> e.coarse_dofs[0] >> e.coarse_dofs[1] >> e.coarse_dofs[2];
    e.dofs.resize(nd);
    for (int& d : e.dofs) is >> d;
    e.values.resize(cols == 0 ? 0 : static_cast<Index>(nd), cols);
    for (Index r = 0; r < e.values.rows(); ++r)
      for (Index j = 0; j < cols; ++j) {
        double re = 0.0, im = 0.0;
        is >> re >> im;
        e.values(r, j) = Complex(re, im);
      }
    if (!is) throw ConfigurationError("corrector cache: truncated element record");
  }
  set.assemble();
  return set;
}

}  // namespace lod2s
