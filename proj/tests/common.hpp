#pragma once

#include <random>

#include "doctest.h"
#include "lod2s/lod.hpp"

namespace lod2s::testing {

inline std::unique_ptr<Hierarchy> small_hierarchy(int macro_n = 4, int cell_n = 4, int levels = 1) {
  HierarchySpec s;
  s.macro_n = macro_n;
  s.cell_n = cell_n;
  s.macro_levels = levels;
  s.cell_levels = levels;
  return make_hierarchy(s);
}

inline ComplexVector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  ComplexVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = Complex(d(rng), d(rng));
  return v;
}

inline TwoScaleFunction random_coarse(const TwoScaleSpace& s, std::mt19937_64& rng) {
  TwoScaleFunction f;
  f.macro = random_vector(s.n_macro(), rng);
  ComplexMatrix a(s.n_star(), s.n_x()), b(s.n_incl(), s.n_x());
  for (Index x = 0; x < s.n_x(); ++x) {
    a.col(x) = random_vector(s.n_star(), rng);
    b.col(x) = random_vector(s.n_incl(), rng);
  }
  f.star = CellField::general(a);
  f.incl = CellField::general(b);
  return f;
}

inline double max_diff(const TwoScaleFunction& a, const TwoScaleFunction& b) {
  double d = (a.macro - b.macro).cwiseAbs().maxCoeff();
  if (a.star.cols() > 0 && a.star.rows() > 0) d = std::max(d, (a.star.dense() - b.star.dense()).cwiseAbs().maxCoeff());
  if (a.incl.cols() > 0 && a.incl.rows() > 0) d = std::max(d, (a.incl.dense() - b.incl.dense()).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace lod2s::testing
