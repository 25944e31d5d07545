#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lod2s/fem.hpp"
#include "lod2s/mesh.hpp"
#include "lod2s/types.hpp"

namespace lod2s {

struct ProblemParams {
  Complex eps_e{1.0, 0.0};
  Complex eps_i = Complex(1.0, 0.0) / Complex(10.0, 1.0);
  double k = 1.0;
  int q = 3;  // stability exponent, carried as metadata only

  Complex inv_eps_e() const { return 1.0 / eps_e; }
  Complex inv_eps_i() const { return 1.0 / eps_i; }
  /// min{1, Re eps_e^-1, Re eps_i^-1}
  double c_min() const;
  /// Throws ConfigurationError unless k > 0 and c_min() > 0.
  void validate() const;
};

/// Boundary datum g on the outer boundary of G.
struct BoundaryDatum {
  enum class Kind { constant, plane_wave } kind = Kind::plane_wave;
  Complex value{0.0, 0.0};           // constant datum
  Eigen::Vector2d direction{1.0, 0.0};  // plane wave direction (unit)
  double k = 1.0;

  static BoundaryDatum constant(Complex c);
  /// g = d_n u_in - i k u_in for u_in = exp(i k d.x).
  static BoundaryDatum plane_wave(double k, Eigen::Vector2d direction = {1.0, 0.0});

  BoundaryFunction function() const;
  bool is_zero() const { return kind == Kind::constant && value == Complex(0.0); }
};

/// Discrete triple space: P1 on G, periodic P1 on Y* and zero-trace P1 on D,
/// the last two piecewise constant in x on the macro triangles inside Omega.
struct TwoScaleSpace {
  std::shared_ptr<const Triangulation2D> macro_mesh;
  std::shared_ptr<const Triangulation2D> cell_mesh;
  DofMap macro, star, incl;

  std::vector<int> x_cells;        // macro triangles inside Omega
  std::vector<int> x_of_triangle;  // macro triangle -> x cell or -1
  RealVector x_area;

  double vol_cell = 0.0, vol_star = 0.0, vol_incl = 0.0;

  // macro moments
  SparseRealMatrix K_inner, K_outer, M, R;
  SparseRealMatrix grad;   // 2 n_x x n_macro, gradient on each x cell
  SparseRealMatrix xmass;  // n_x x n_macro, integral over each x cell

  // cell moments
  SparseRealMatrix K1;  // Y* stiffness
  RealMatrix G1;        // 2 x n_star, integrals of gradients over Y*
  RealVector mean1;     // integrals of Y* basis functions
  SparseRealMatrix K2, M2;
  RealVector m2;  // integrals of D basis functions

  Index n_macro() const { return macro.dof_count; }
  Index n_star() const { return star.dof_count; }
  Index n_incl() const { return incl.dof_count; }
  Index n_x() const { return static_cast<Index>(x_cells.size()); }
  /// Total number of unknowns of the triple space (mean constraints excluded).
  Index dimension() const { return n_macro() + n_x() * (n_star() + n_incl()); }
};

TwoScaleSpace make_space(std::shared_ptr<const Triangulation2D> macro_mesh,
                         std::shared_ptr<const Triangulation2D> cell_mesh);

/// Cell component, piecewise constant in x. Either a general field
/// (identity = true, coeffs is n x n_x) or factored as basis * coeffs with a
/// thin basis, which keeps fine cell components of reference solutions cheap.
struct CellField {
  ComplexMatrix basis;   // n x r, unused when identity
  ComplexMatrix coeffs;  // r x n_x
  bool identity = false;
  Index n = 0;

  static CellField zero(Index n, Index nx);
  static CellField general(ComplexMatrix values);
  static CellField factored(ComplexMatrix basis, ComplexMatrix coeffs);

  Index rows() const { return n; }
  Index cols() const { return coeffs.cols(); }
  Index rank() const { return identity ? n : basis.cols(); }
  ComplexMatrix dense() const;
  ComplexVector column(Index x) const;
  /// G * field for a small left factor (q x n -> q x n_x).
  template <typename Left>
  ComplexMatrix left(const Left& G) const {
    if (identity) return G * coeffs;
    return (G * basis) * coeffs;
  }
};

CellField combine(const CellField& a, Complex alpha, const CellField& b, Complex beta);
CellField scale(const CellField& a, Complex alpha);

/// Per x cell values of test_x^H K trial_x.
ComplexVector per_cell_quadratic(const SparseRealMatrix& K, const CellField& test, const CellField& trial);

struct TwoScaleFunction {
  ComplexVector macro;
  CellField star;
  CellField incl;

  static TwoScaleFunction zero(const TwoScaleSpace& space);
};

TwoScaleFunction combine(const TwoScaleFunction& a, Complex alpha, const TwoScaleFunction& b, Complex beta);
TwoScaleFunction operator-(const TwoScaleFunction& a, const TwoScaleFunction& b);
TwoScaleFunction operator+(const TwoScaleFunction& a, const TwoScaleFunction& b);
TwoScaleFunction operator*(Complex c, const TwoScaleFunction& a);

/// Scalar weights of the six integral families. For a product region A x B
/// (A a set of macro triangles, B a set of cell triangles):
///   coupled_grad     (grad v + grad_y v1).(grad psi + grad_y psi1)* over (A in Omega) x (B in Y*)
///   outer_grad_total grad v.grad psi*  over (A outside Omega), times |B|
///   outer_grad_star  grad v.grad psi*  over (A outside Omega), times |B in Y*|
///   incl_grad        grad_y v2.grad_y psi2* over (A in Omega) x (B in D)
///   mass             (v + chi_D v2)(psi + chi_D psi2)* over A x B
///   robin            v psi* over boundary edges of A, times |B|
struct FormCoefficients {
  Complex coupled_grad{0.0};
  Complex outer_grad_total{0.0};
  Complex outer_grad_star{0.0};
  Complex incl_grad{0.0};
  Complex mass{0.0};
  Complex robin{0.0};

  static FormCoefficients form(const ProblemParams& p);
  static FormCoefficients energy(double k);
  static FormCoefficients h1e();
};

/// Product region; empty masks select everything.
struct Region {
  std::vector<char> x_mask;  // per macro triangle
  std::vector<char> y_mask;  // per cell triangle
};

Complex evaluate_form(const TwoScaleSpace& space, const FormCoefficients& c, const TwoScaleFunction& trial,
                      const TwoScaleFunction& test, const Region& region = {});

/// B(trial, test), antilinear in test.
Complex apply_B(const TwoScaleSpace& space, const ProblemParams& p, const TwoScaleFunction& trial,
                const TwoScaleFunction& test);

/// B restricted to G_T x Y_S. The cell patch may hold Y* and D triangles.
/// Terms depending on x only carry the weight |Y_S| (resp. |Y*_S|), which
/// makes the localized form additive over partitions of G x Y.
Complex apply_B_localized(const TwoScaleSpace& space, const ProblemParams& p, const Patch& macro_patch,
                          const Patch& cell_patch, const TwoScaleFunction& trial, const TwoScaleFunction& test);

double energy_norm(const TwoScaleSpace& space, double k, const TwoScaleFunction& v, const Region& region = {});
double h1e_seminorm(const TwoScaleSpace& space, const TwoScaleFunction& v, const Region& region = {});
Complex h1e_inner(const TwoScaleSpace& space, const TwoScaleFunction& v, const TwoScaleFunction& w,
                  const Region& region = {});
/// k^2 || v + chi_D v2 ||^2 over G x Y divided by k^2.
double coupled_l2_norm_squared(const TwoScaleSpace& space, const TwoScaleFunction& v);

/// Macro load (g, phi_i) over the outer boundary; the cell parts of the
/// right-hand side vanish.
ComplexVector rhs_vector(const TwoScaleSpace& space, const BoundaryDatum& g);

}  // namespace lod2s
