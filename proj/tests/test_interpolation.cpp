#include <random>

#include "common.hpp"

using namespace lod2s;
using lod2s::testing::max_diff;
using lod2s::testing::random_coarse;

TEST_CASE("interpolation returns embedded coarse functions exactly") {
  auto h = lod2s::testing::small_hierarchy();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = random_coarse(h->coarse, rng);
    CHECK(max_diff(apply(h->interp, embed(h->interp, c)), c) < 1e-12);
  }
}

TEST_CASE("interpolation is a projection and its kernel is annihilated") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 2);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto v = random_function(h->fine, seed);
    const auto Iv = apply(h->interp, v);
    CHECK(max_diff(apply(h->interp, embed(h->interp, Iv)), Iv) < 1e-12);
    const auto w = kernel_projection(h->interp, v);
    const auto Iw = apply(h->interp, w);
    CHECK(max_diff(Iw, TwoScaleFunction::zero(h->coarse)) < 1e-12);
  }
}

TEST_CASE("prolongation reproduces affine functions") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 2);
  const auto& C = *h->coarse.macro_mesh;
  const auto& F = *h->fine.macro_mesh;
  const auto affine = [](const Eigen::Vector2d& p) { return 1.0 + 2.0 * p.x() - 3.0 * p.y(); };
  RealVector c(h->coarse.n_macro()), f(h->fine.n_macro());
  for (Index d = 0; d < c.size(); ++d) c[d] = affine(C.vertex(h->coarse.macro.dof_to_vertex[d]));
  for (Index d = 0; d < f.size(); ++d) f[d] = affine(F.vertex(h->fine.macro.dof_to_vertex[d]));
  CHECK((h->interp.prolong_macro * c - f).cwiseAbs().maxCoeff() < 1e-13);
  // and the interpolation of an affine function is exact
  CHECK((h->interp.macro * f - c).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("interpolation weights are local") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  CHECK(h->interp.locality == 1);
  const auto& C = *h->coarse.macro_mesh;
  const auto& F = *h->fine.macro_mesh;
  // every fine dof feeding coarse vertex z lies in the closure of the star of z
  const SparseRealMatrix& A = h->interp.macro;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseRealMatrix::InnerIterator it(A, k); it; ++it) {
      const Eigen::Vector2d z = C.vertex(h->coarse.macro.dof_to_vertex[it.row()]);
      const Eigen::Vector2d y = F.vertex(h->fine.macro.dof_to_vertex[it.col()]);
      CHECK((z - y).lpNorm<Eigen::Infinity>() <= C.mesh_size() + 1e-12);
    }
  // rows of the x averaging sum to one
  CHECK((h->interp.x_average * RealVector::Ones(h->fine.n_x()) - RealVector::Ones(h->coarse.n_x())).norm() < 1e-13);
}

TEST_CASE("patch dofs and constraints") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const auto& F = *h->fine.macro_mesh;
  const auto& C = *h->coarse.macro_mesh;
  std::vector<int> all(C.num_triangles());
  for (int t = 0; t < C.num_triangles(); ++t) all[t] = t;
  const auto mask = refine_mask(F, all);
  CHECK(std::count(mask.begin(), mask.end(), 1) == F.num_triangles());
  const auto dofs = interior_dofs(F, h->fine.macro, mask);
  CHECK(static_cast<Index>(dofs.size()) == h->fine.n_macro());

  int inner = 0;
  while (C.label(inner) != Subdomain::inner) ++inner;
  const int one[1] = {inner};
  const auto small = refine_mask(F, one);
  CHECK(std::count(small.begin(), small.end(), 1) == 4);
  // every fine vertex of a once refined interior triangle touches its boundary
  CHECK(interior_dofs(F, h->fine.macro, small).empty());
  // on the outer boundary the edge midpoint has its support inside the triangle
  const int corner[1] = {0};
  CHECK(interior_dofs(F, h->fine.macro, refine_mask(F, corner)).size() == 1);

  const SparseRealMatrix K = kernel_constraints(h->interp, Component::macro, dofs);
  CHECK(K.rows() == h->coarse.n_macro());
  CHECK(K.cols() == h->fine.n_macro());
  const auto w = kernel_projection(h->interp, random_function(h->fine, 9));
  CHECK((K.cast<Complex>() * w.macro).norm() < 1e-12);
}

TEST_CASE("interpolation constants are moderate") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const auto c = measure_constants(h->interp, h->fine, h->coarse, 2.0, 4, 1);
  for (double v : {c.macro, c.star, c.incl, c.energy}) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    CHECK(v < 20.0);
  }
  const auto again = measure_constants(h->interp, h->fine, h->coarse, 2.0, 4, 1);
  CHECK(again.macro == c.macro);
  CHECK(again.energy == c.energy);
}
