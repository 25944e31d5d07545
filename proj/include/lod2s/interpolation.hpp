#pragma once

#include <cstdint>
#include <span>

#include "lod2s/two_scale.hpp"

namespace lod2s {

enum class Component { macro = 0, star = 1, incl = 2 };

/// The interpolation triple, each component the Oswald vertex average of the
/// elementwise L2 projection onto the coarse mesh. The Y* average runs over
/// the torus star of every vertex; the D component has no dofs on the
/// boundary of D. Cell x values are volume averaged onto coarse x cells.
struct QuasiInterpolator {
  SparseRealMatrix macro;  // coarse x fine
  SparseRealMatrix star;
  SparseRealMatrix incl;

  SparseRealMatrix prolong_macro;  // fine x coarse, exact for nested P1
  SparseRealMatrix prolong_star;
  SparseRealMatrix prolong_incl;

  SparseRealMatrix x_average;    // coarse x cells x fine x cells, |t| / |T|
  SparseRealMatrix x_aggregate;  // same pattern, entries 1
  SparseRealMatrix x_expand;     // fine x cells x coarse x cells

  int locality = 1;  // coarse dof values depend on fine dofs in N(T) only

  const SparseRealMatrix& component(Component c) const;
  const SparseRealMatrix& prolongation(Component c) const;
};

/// Requires the fine meshes to carry refinement parents into the coarse meshes.
QuasiInterpolator build_interpolator(const TwoScaleSpace& fine, const TwoScaleSpace& coarse);

TwoScaleFunction apply(const QuasiInterpolator& I, const TwoScaleFunction& fine);
/// Fine representation of a coarse function.
TwoScaleFunction embed(const QuasiInterpolator& I, const TwoScaleFunction& coarse);

/// v - P I v, an element of the kernel of the interpolation.
TwoScaleFunction kernel_projection(const QuasiInterpolator& I, const TwoScaleFunction& fine);

/// Fine triangles whose parent belongs to the coarse triangle set.
std::vector<char> refine_mask(const Triangulation2D& fine, std::span<const int> coarse_triangles);

/// Dofs whose support (active triangles, evaluated on the torus) lies inside
/// the triangle mask, in ascending order.
std::vector<int> interior_dofs(const Triangulation2D& mesh, const DofMap& dofs, std::span<const char> mask);

/// Rows of the component matrix restricted to the given fine dofs, keeping
/// only rows that do not vanish there. The null space is the kernel of the
/// interpolation restricted to functions supported on those dofs.
SparseRealMatrix kernel_constraints(const QuasiInterpolator& I, Component c, std::span<const int> fine_dofs);

struct InterpolationConstants {
  double macro = 0.0;   // max_T (H^-1 |v - Iv|_T + |grad Iv|_T) / |grad v|_N(T)
  double star = 0.0;
  double incl = 0.0;
  double energy = 0.0;  // max |Iv|_e / |v|_e
};

/// Sampled lower estimates of the interpolation constants from random fine
/// functions (smooth modes plus nodal noise).
InterpolationConstants measure_constants(const QuasiInterpolator& I, const TwoScaleSpace& fine,
                                         const TwoScaleSpace& coarse, double k, int samples, std::uint64_t seed);

/// Random fine two-scale function with general cell fields (small spaces only).
TwoScaleFunction random_function(const TwoScaleSpace& space, std::uint64_t seed);

}  // namespace lod2s
