#include "lod2s/two_scale.hpp"

#include <algorithm>
#include <cmath>

namespace lod2s {

double ProblemParams::c_min() const {
  return std::min({1.0, inv_eps_e().real(), inv_eps_i().real()});
}

void ProblemParams::validate() const {
  if (!(k > 0.0)) throw ConfigurationError("wave number k must be positive");
  if (!(c_min() > 0.0)) throw ConfigurationError("parameters violate C_min > 0");
  if (q < 0) throw ConfigurationError("stability exponent q must be nonnegative");
}

BoundaryDatum BoundaryDatum::constant(Complex c) {
  BoundaryDatum g;
  g.kind = Kind::constant;
  g.value = c;
  return g;
}

BoundaryDatum BoundaryDatum::plane_wave(double k, Eigen::Vector2d direction) {
  BoundaryDatum g;
  g.kind = Kind::plane_wave;
  g.k = k;
  g.direction = direction.normalized();
  return g;
}

BoundaryFunction BoundaryDatum::function() const {
  if (kind == Kind::constant) {
    const Complex c = value;
    return [c](const Eigen::Vector2d&, const Eigen::Vector2d&) { return c; };
  }
  const double kk = k;
  const Eigen::Vector2d d = direction;
  return [kk, d](const Eigen::Vector2d& x, const Eigen::Vector2d& n) {
    const Complex i(0.0, 1.0);
    return i * kk * (d.dot(n) - 1.0) * std::exp(i * kk * d.dot(x));
  };
}

TwoScaleSpace make_space(std::shared_ptr<const Triangulation2D> macro_mesh,
                         std::shared_ptr<const Triangulation2D> cell_mesh) {
  if (!macro_mesh || !cell_mesh) throw ArgumentError("make_space: missing mesh");
  if (macro_mesh->kind() != MeshKind::macro) throw ConfigurationError("make_space: macro mesh expected");
  if (!cell_mesh->periodic()) throw ConfigurationError("make_space: cell mesh must be periodic");
  TwoScaleSpace s;
  s.macro_mesh = macro_mesh;
  s.cell_mesh = cell_mesh;
  const auto& G = *macro_mesh;
  const auto& Y = *cell_mesh;
  s.macro = build_dofmap(G, SpaceKind::free);
  s.star = build_dofmap(Y, SpaceKind::periodic_zero_mean);
  s.incl = build_dofmap(Y, SpaceKind::zero_trace);

  s.x_of_triangle.assign(G.num_triangles(), -1);
  for (int t = 0; t < G.num_triangles(); ++t)
    if (G.label(t) == Subdomain::inner) {
      s.x_of_triangle[t] = static_cast<int>(s.x_cells.size());
      s.x_cells.push_back(t);
    }
  s.x_area.resize(s.n_x());
  for (Index i = 0; i < s.n_x(); ++i) s.x_area[i] = G.area(s.x_cells[i]);

  s.vol_star = Y.subdomain_area(Subdomain::outer);
  s.vol_incl = Y.subdomain_area(Subdomain::inner);
  s.vol_cell = s.vol_star + s.vol_incl;

  std::vector<double> in(G.num_triangles()), out(G.num_triangles()), one(G.num_triangles(), 1.0);
  for (int t = 0; t < G.num_triangles(); ++t) {
    in[t] = G.label(t) == Subdomain::inner ? 1.0 : 0.0;
    out[t] = 1.0 - in[t];
  }
  s.K_inner = assemble_stiffness<double>(G, s.macro, std::span<const double>(in));
  s.K_outer = assemble_stiffness<double>(G, s.macro, std::span<const double>(out));
  s.M = assemble_mass<double>(G, s.macro, std::span<const double>(one));
  s.R = assemble_boundary_mass(G, s.macro);
  s.grad = gradient_operator(G, s.macro, s.x_cells);
  s.xmass = integral_operator(G, s.macro, s.x_cells);

  std::vector<double> ones(Y.num_triangles(), 1.0);
  s.K1 = assemble_stiffness<double>(Y, s.star, std::span<const double>(ones));
  s.G1 = gradient_integrals(Y, s.star);
  s.mean1 = basis_integrals(Y, s.star);
  s.K2 = assemble_stiffness<double>(Y, s.incl, std::span<const double>(ones));
  s.M2 = assemble_mass<double>(Y, s.incl, std::span<const double>(ones));
  s.m2 = basis_integrals(Y, s.incl);
  return s;
}

CellField CellField::zero(Index n, Index nx) {
  CellField f;
  f.n = n;
  f.basis = ComplexMatrix::Zero(n, 0);
  f.coeffs = ComplexMatrix::Zero(0, nx);
  return f;
}

CellField CellField::general(ComplexMatrix values) {
  CellField f;
  f.identity = true;
  f.n = values.rows();
  f.coeffs = std::move(values);
  return f;
}

CellField CellField::factored(ComplexMatrix basis, ComplexMatrix coeffs) {
  if (basis.cols() != coeffs.rows()) throw ArgumentError("CellField: basis/coefficient mismatch");
  CellField f;
  f.n = basis.rows();
  f.basis = std::move(basis);
  f.coeffs = std::move(coeffs);
  return f;
}

ComplexMatrix CellField::dense() const {
  if (identity) return coeffs;
  return basis * coeffs;
}

ComplexVector CellField::column(Index x) const {
  if (identity) return coeffs.col(x);
  return basis * coeffs.col(x);
}

CellField combine(const CellField& a, Complex alpha, const CellField& b, Complex beta) {
  if (a.n != b.n || a.cols() != b.cols()) throw ArgumentError("CellField: shape mismatch");
  if (a.identity || b.identity) return CellField::general(alpha * a.dense() + beta * b.dense());
  ComplexMatrix basis(a.n, a.rank() + b.rank());
  basis << a.basis, b.basis;
  ComplexMatrix coeffs(a.rank() + b.rank(), a.cols());
  coeffs << alpha * a.coeffs, beta * b.coeffs;
  return CellField::factored(std::move(basis), std::move(coeffs));
}

CellField scale(const CellField& a, Complex alpha) {
  CellField r = a;
  r.coeffs *= alpha;
  return r;
}

ComplexVector per_cell_quadratic(const SparseRealMatrix& K, const CellField& test, const CellField& trial) {
  const Index nx = trial.cols();
  if (!test.identity && !trial.identity) {
    const ComplexMatrix gram = test.basis.adjoint() * (K * trial.basis);
    return (test.coeffs.conjugate().array() * (gram * trial.coeffs).array()).colwise().sum().transpose();
  }
  const ComplexMatrix tv = trial.dense();
  const ComplexMatrix ktv = K * tv;
  if (test.identity) return (test.coeffs.conjugate().array() * ktv.array()).colwise().sum().transpose();
  const ComplexMatrix proj = test.basis.adjoint() * ktv;
  ComplexVector out(nx);
  for (Index x = 0; x < nx; ++x) out[x] = test.coeffs.col(x).dot(proj.col(x));
  return out;
}

TwoScaleFunction TwoScaleFunction::zero(const TwoScaleSpace& space) {
  return {ComplexVector::Zero(space.n_macro()), CellField::zero(space.n_star(), space.n_x()),
          CellField::zero(space.n_incl(), space.n_x())};
}

TwoScaleFunction combine(const TwoScaleFunction& a, Complex alpha, const TwoScaleFunction& b, Complex beta) {
  return {alpha * a.macro + beta * b.macro, combine(a.star, alpha, b.star, beta),
          combine(a.incl, alpha, b.incl, beta)};
}

TwoScaleFunction operator-(const TwoScaleFunction& a, const TwoScaleFunction& b) { return combine(a, 1.0, b, -1.0); }
TwoScaleFunction operator+(const TwoScaleFunction& a, const TwoScaleFunction& b) { return combine(a, 1.0, b, 1.0); }
TwoScaleFunction operator*(Complex c, const TwoScaleFunction& a) {
  return {c * a.macro, scale(a.star, c), scale(a.incl, c)};
}

FormCoefficients FormCoefficients::form(const ProblemParams& p) {
  FormCoefficients c;
  c.coupled_grad = p.inv_eps_e();
  c.outer_grad_total = 1.0;
  c.incl_grad = p.inv_eps_i();
  c.mass = -p.k * p.k;
  c.robin = Complex(0.0, -p.k);
  return c;
}

FormCoefficients FormCoefficients::energy(double k) {
  FormCoefficients c;
  c.coupled_grad = 1.0;
  c.outer_grad_star = 1.0;
  c.incl_grad = 1.0;
  c.mass = k * k;
  return c;
}

FormCoefficients FormCoefficients::h1e() {
  FormCoefficients c;
  c.coupled_grad = 1.0;
  c.outer_grad_star = 1.0;
  c.incl_grad = 1.0;
  return c;
}

namespace {

struct CellMoments {
  const SparseRealMatrix* K1;
  const RealMatrix* G1;
  const SparseRealMatrix* K2;
  const SparseRealMatrix* M2;
  const RealVector* m2;
  double vol_cell, vol_star;
  // storage for masked variants
  SparseRealMatrix k1, k2, mm2;
  RealMatrix g1;
  RealVector mv2;
};

void masked_moments(const TwoScaleSpace& s, const std::vector<char>& mask, CellMoments& cm) {
  const auto& Y = *s.cell_mesh;
  if (mask.empty()) {
    cm.K1 = &s.K1;
    cm.G1 = &s.G1;
    cm.K2 = &s.K2;
    cm.M2 = &s.M2;
    cm.m2 = &s.m2;
    cm.vol_cell = s.vol_cell;
    cm.vol_star = s.vol_star;
    return;
  }
  if (mask.size() != static_cast<std::size_t>(Y.num_triangles())) throw ArgumentError("region: bad cell mask");
  DofMap star = s.star, incl = s.incl;
  std::vector<double> w(Y.num_triangles());
  cm.vol_cell = cm.vol_star = 0.0;
  for (int t = 0; t < Y.num_triangles(); ++t) {
    star.active[t] = star.active[t] && mask[t];
    incl.active[t] = incl.active[t] && mask[t];
    w[t] = mask[t] ? 1.0 : 0.0;
    if (mask[t]) {
      cm.vol_cell += Y.area(t);
      if (Y.label(t) == Subdomain::outer) cm.vol_star += Y.area(t);
    }
  }
  cm.k1 = assemble_stiffness<double>(Y, star, std::span<const double>(w));
  cm.g1 = gradient_integrals(Y, star);
  cm.k2 = assemble_stiffness<double>(Y, incl, std::span<const double>(w));
  cm.mm2 = assemble_mass<double>(Y, incl, std::span<const double>(w));
  cm.mv2 = basis_integrals(Y, incl);
  cm.K1 = &cm.k1;
  cm.G1 = &cm.g1;
  cm.K2 = &cm.k2;
  cm.M2 = &cm.mm2;
  cm.m2 = &cm.mv2;
}

void check_shape(const TwoScaleSpace& s, const TwoScaleFunction& v) {
  if (v.macro.size() != s.n_macro() || v.star.rows() != s.n_star() || v.star.cols() != s.n_x() ||
      v.incl.rows() != s.n_incl() || v.incl.cols() != s.n_x())
    throw ArgumentError("two-scale function does not conform to the space");
}

}  // namespace

Complex evaluate_form(const TwoScaleSpace& s, const FormCoefficients& c, const TwoScaleFunction& v,
                      const TwoScaleFunction& psi, const Region& region) {
  check_shape(s, v);
  check_shape(s, psi);
  const auto& G = *s.macro_mesh;
  CellMoments cm;
  masked_moments(s, region.y_mask, cm);
  const bool xall = region.x_mask.empty();
  if (!xall && region.x_mask.size() != static_cast<std::size_t>(G.num_triangles()))
    throw ArgumentError("region: bad macro mask");

  // macro-only terms
  Complex value = 0.0;
  {
    const Complex k_in = c.coupled_grad * cm.vol_star;
    const Complex k_out = c.outer_grad_total * cm.vol_cell + c.outer_grad_star * cm.vol_star;
    const Complex m = c.mass * cm.vol_cell;
    const Complex r = c.robin * cm.vol_cell;
    if (xall) {
      ComplexVector Av = k_in * (s.K_inner * v.macro) + k_out * (s.K_outer * v.macro) + m * (s.M * v.macro) +
                         r * (s.R * v.macro);
      value += psi.macro.dot(Av);
    } else {
      std::vector<Complex> ks(G.num_triangles()), ms(G.num_triangles());
      for (int t = 0; t < G.num_triangles(); ++t) {
        if (!region.x_mask[t]) continue;
        ks[t] = G.label(t) == Subdomain::inner ? k_in : k_out;
        ms[t] = m;
      }
      const auto K = assemble_stiffness<Complex>(G, s.macro, std::span<const Complex>(ks));
      const auto M = assemble_mass<Complex>(G, s.macro, std::span<const Complex>(ms));
      const auto R = assemble_boundary_mass(G, s.macro, region.x_mask);
      ComplexVector Av = K * v.macro + M * v.macro + r * (R * v.macro);
      value += psi.macro.dot(Av);
    }
  }
  if (s.n_x() == 0) return value;

  // x-cell terms
  const ComplexMatrix gv = Eigen::Map<const ComplexMatrix>(ComplexVector(s.grad * v.macro).data(), 2, s.n_x());
  const ComplexMatrix gp = Eigen::Map<const ComplexMatrix>(ComplexVector(s.grad * psi.macro).data(), 2, s.n_x());
  const ComplexVector iv = s.xmass * v.macro;
  const ComplexVector ip = s.xmass * psi.macro;
  const ComplexMatrix g1v = v.star.left(*cm.G1);
  const ComplexMatrix g1p = psi.star.left(*cm.G1);
  const ComplexVector k1 = per_cell_quadratic(*cm.K1, psi.star, v.star);
  const ComplexVector k2 = per_cell_quadratic(*cm.K2, psi.incl, v.incl);
  const ComplexVector m2q = per_cell_quadratic(*cm.M2, psi.incl, v.incl);
  const RealMatrix m2row = cm.m2->transpose();
  const ComplexMatrix m2v = v.incl.left(m2row);
  const ComplexMatrix m2p = psi.incl.left(m2row);
  for (Index x = 0; x < s.n_x(); ++x) {
    if (!xall && !region.x_mask[s.x_cells[x]]) continue;
    const double w = s.x_area[x];
    const Complex coupled = gp.col(x).dot(g1v.col(x)) + g1p.col(x).dot(gv.col(x)) + k1[x];
    value += c.coupled_grad * w * coupled;
    value += c.incl_grad * w * k2[x];
    value += c.mass * (w * m2q[x] + iv[x] * std::conj(m2p(0, x)) + std::conj(ip[x]) * m2v(0, x));
  }
  return value;
}

Complex apply_B(const TwoScaleSpace& space, const ProblemParams& p, const TwoScaleFunction& trial,
                const TwoScaleFunction& test) {
  return evaluate_form(space, FormCoefficients::form(p), trial, test);
}

Complex apply_B_localized(const TwoScaleSpace& space, const ProblemParams& p, const Patch& macro_patch,
                          const Patch& cell_patch, const TwoScaleFunction& trial, const TwoScaleFunction& test) {
  Region r;
  r.x_mask = triangle_mask(*space.macro_mesh, macro_patch.members);
  r.y_mask = triangle_mask(*space.cell_mesh, cell_patch.members);
  return evaluate_form(space, FormCoefficients::form(p), trial, test, r);
}

double energy_norm(const TwoScaleSpace& space, double k, const TwoScaleFunction& v, const Region& region) {
  return std::sqrt(std::max(0.0, evaluate_form(space, FormCoefficients::energy(k), v, v, region).real()));
}

double h1e_seminorm(const TwoScaleSpace& space, const TwoScaleFunction& v, const Region& region) {
  return std::sqrt(std::max(0.0, evaluate_form(space, FormCoefficients::h1e(), v, v, region).real()));
}

Complex h1e_inner(const TwoScaleSpace& space, const TwoScaleFunction& v, const TwoScaleFunction& w,
                  const Region& region) {
  return evaluate_form(space, FormCoefficients::h1e(), v, w, region);
}

double coupled_l2_norm_squared(const TwoScaleSpace& space, const TwoScaleFunction& v) {
  FormCoefficients c;
  c.mass = 1.0;
  return evaluate_form(space, c, v, v).real();
}

ComplexVector rhs_vector(const TwoScaleSpace& space, const BoundaryDatum& g) {
  if (g.is_zero()) return ComplexVector::Zero(space.n_macro());
  return boundary_load(*space.macro_mesh, space.macro, g.function());
}

}  // namespace lod2s
