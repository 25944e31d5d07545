#include <atomic>
#include <sstream>

#include "common.hpp"

using namespace lod2s;

namespace {

ProblemParams params(double k) {
  ProblemParams p;
  p.k = k;
  return p;
}

ComplexVector kernel_part(const QuasiInterpolator& I, Component c, const ComplexVector& v) {
  return v - I.prolongation(c).cast<Complex>() * (I.component(c).cast<Complex>() * v);
}

const ComplexVector& part(const TwoScaleFunction& f, Component c, ComplexVector& storage, Index x = 0) {
  if (c == Component::macro) return f.macro;
  storage = (c == Component::star ? f.star : f.incl).column(x);
  return storage;
}

}  // namespace

TEST_CASE("idealized test basis is B-orthogonal to the kernel") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, params(3.0));
  const CorrectorSet Q = build_corrected_test_basis(ctx, -1);
  const TwoScaleFunction v = random_function(h->fine, 4);
  for (Component c : {Component::macro, Component::star, Component::incl}) {
    ComplexVector storage;
    const ComplexVector w = kernel_part(h->interp, c, part(v, c, storage));
    const SparseComplexMatrix test = h->interp.prolongation(c).cast<Complex>() - Q.matrix(c);
    // B(w, (P - Q) lambda_i) = ((P - Q) lambda_i)^H A w
    const ComplexVector defect = test.adjoint() * (ctx.matrix(c) * w);
    const ComplexVector scale = h->interp.prolongation(c).cast<Complex>().adjoint() * (ctx.matrix(c) * w);
    CHECK(defect.norm() <= 1e-9 * scale.norm());
  }
}

TEST_CASE("corrections lie in the kernel of the interpolation") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, params(2.0));
  const CorrectorSet Q = build_corrected_test_basis(ctx, 1);
  CHECK(Q.elements.size() == ctx.seeds(Component::macro).size() + ctx.seeds(Component::star).size() +
                                 ctx.seeds(Component::incl).size());
  for (Component c : {Component::macro, Component::star, Component::incl}) {
    const SparseComplexMatrix IQ = h->interp.component(c).cast<Complex>() * Q.matrix(c);
    CHECK(IQ.norm() <= 1e-10 * std::max(1.0, Q.matrix(c).norm()));
  }
  // corrections vanish outside their patch
  for (const auto& e : Q.elements) {
    const auto mask = refine_mask(ctx.fine_mesh(e.kind), e.patch);
    const auto inside = interior_dofs(ctx.fine_mesh(e.kind), ctx.fine_dofmap(e.kind), mask);
    CHECK(e.dofs == inside);
  }
}

TEST_CASE("saturated localized correctors equal the idealized ones") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, params(2.0));
  for (Component c : {Component::macro, Component::incl}) {
    const int T = ctx.seeds(c).front();
    const auto ideal = ctx.solve(c, T, -1);
    const auto local = ctx.solve(c, T, 20);
    const Index n = ctx.fine_dofmap(c).dof_count;
    for (int j = 0; j < 3; ++j) CHECK((ideal.expand(j, n) - local.expand(j, n)).norm() <= 1e-10);
  }
  CHECK_THROWS_AS(ctx.solve(Component::macro, -1, 1), ArgumentError);
  CHECK_THROWS_AS(ctx.solve(Component::macro, 0, -1, 10), CorrectorError);
}

TEST_CASE("threaded construction is deterministic") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, params(2.0));
  const CorrectorSet a = build_corrected_test_basis(ctx, 1, 1);
  const CorrectorSet b = build_corrected_test_basis(ctx, 1, 3);
  for (int c = 0; c < 3; ++c) CHECK(SparseComplexMatrix(a.Q[c] - b.Q[c]).norm() == 0.0);

  std::atomic<int> sum{0};
  parallel_for(100, 4, [&](int i) { sum += i; });
  CHECK(sum == 4950);
  CHECK_THROWS_AS(parallel_for(10, 2,
                               [](int i) {
                                 if (i == 7) throw SolverError("boom");
                               }),
                  SolverError);
}

TEST_CASE("corrector cache round trip") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, params(2.0));
  const CorrectorSet a = build_corrected_test_basis(ctx, 1);
  std::stringstream ss;
  write_correctors(ss, a);
  const CorrectorSet b = read_correctors(ss);
  CHECK(b.m == 1);
  REQUIRE(b.elements.size() == a.elements.size());
  for (int c = 0; c < 3; ++c) CHECK(SparseComplexMatrix(a.Q[c] - b.Q[c]).norm() == 0.0);
  std::stringstream bad("correctors m 1 fine 1 2 3 coarse 1 2 3 elements 1\nelement 5 0 0 0 0 0\n");
  CHECK_THROWS_AS(read_correctors(bad), ConfigurationError);
}

TEST_CASE("decay fit") {
  std::vector<double> tail;
  for (int m = 0; m < 5; ++m) tail.push_back(3.0 * std::pow(0.25, m));
  const DecayFit f = fit_decay(tail);
  CHECK(f.beta == doctest::Approx(0.25));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.points == 5);
  // saturated and vanishing entries are ignored
  tail.push_back(0.0);
  const DecayFit g = fit_decay(tail, {0, 0, 0, 1, 0, 0});
  CHECK(g.points == 4);
  CHECK(g.beta == doctest::Approx(0.25));
  CHECK(fit_decay({1.0}).points == 1);

  CHECK(auto_oversampling(8.0, 0.5) == 3);
  CHECK(auto_oversampling(16.0, 0.1) == 2);
  CHECK(auto_oversampling(100.0, 0.9) == 44);
  CHECK(auto_oversampling(0.5, 0.5) == 2);
  CHECK_THROWS_AS(auto_oversampling(8.0, 1.0), ArgumentError);
}

TEST_CASE("decay profile of a small corrector") {
  auto h = lod2s::testing::small_hierarchy(4, 4, 1);
  const CorrectorContext ctx(h->fine, h->coarse, h->interp, params(2.0));
  const int T = ctx.seeds(Component::macro)[5];
  const DecayProfile d = corrector_decay_profile(ctx, Component::macro, T, 0, 3);
  REQUIRE(d.tail.size() == 4);
  for (int m = 1; m <= 3; ++m) {
    CHECK(d.tail[m] <= d.tail[m - 1]);
    CHECK(d.localization_error[m] <= d.localization_error[m - 1] * (1 + 1e-9));
  }
  CHECK_THROWS_AS(corrector_decay_profile(ctx, Component::macro, T, 3, 1), ArgumentError);
}
