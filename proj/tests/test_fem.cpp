#include <random>

#include "common.hpp"

using namespace lod2s;

TEST_CASE("dof maps") {
  const auto G = build_structured_mesh(SquareDomain::macro(1.0, 0.5), 4);
  CHECK(build_dofmap(G, SpaceKind::free).dof_count == 41);
  CHECK_THROWS_AS(build_dofmap(G, SpaceKind::periodic_zero_mean), ConfigurationError);

  const auto Y = build_structured_mesh(SquareDomain::cell(0.5), 4);
  const DofMap star = build_dofmap(Y, SpaceKind::periodic_zero_mean);
  const DofMap incl = build_dofmap(Y, SpaceKind::zero_trace);
  // torus has 32 vertices; grid vertex (0,0) and four cell centres lie inside D
  CHECK(star.dof_count == 27);
  CHECK(star.mean_constraint);
  CHECK(incl.dof_count == 5);
  for (const auto& [image, canonical] : Y.periodic_map()) CHECK(star.dof(image) == star.dof(canonical));
}

TEST_CASE("reference element matrices") {
  const Eigen::Matrix3d K = element_stiffness<double>({0, 0}, {1, 0}, {0, 1});
  Eigen::Matrix3d expected;
  expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  CHECK((K - expected).norm() < 1e-15);

  const Eigen::Matrix3d M = element_mass<double>(0.5);
  Eigen::Matrix3d em;
  em << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  CHECK((M - em * 0.5 / 12).norm() < 1e-15);

  const Eigen::Matrix2d E = edge_mass<double>(0.25);
  CHECK(E(0, 0) == doctest::Approx(0.25 / 3));
  CHECK(E(0, 1) == doctest::Approx(0.25 / 6));

  const Complex c(2.0, -3.0);
  const Eigen::Matrix3cd Kc = element_stiffness<Complex>({0, 0}, {1, 0}, {0, 1}, c);
  CHECK((Kc - c * expected.cast<Complex>()).norm() < 1e-15);
}

TEST_CASE("global assembly identities") {
  const auto G = build_structured_mesh(SquareDomain::macro(1.0, 0.5), 4);
  const DofMap d = build_dofmap(G, SpaceKind::free);
  const auto K = assemble_stiffness(G, d, {Complex(1.0), Complex(1.0)});
  const ComplexVector ones = ComplexVector::Ones(d.dof_count);
  CHECK((K * ones).norm() < 1e-13);

  const auto M = assemble_mass(G, d, {Complex(1.0), Complex(1.0)});
  CHECK(ones.dot(M * ones).real() == doctest::Approx(1.0));

  // zero weight outside Omega only sees the area of Omega
  const auto Mi = assemble_mass(G, d, {Complex(0.0), Complex(1.0)});
  CHECK(ones.dot(Mi * ones).real() == doctest::Approx(0.25));

  const SparseRealMatrix R = assemble_boundary_mass(G, d);
  CHECK(R.sum() == doctest::Approx(4.0));
  std::vector<char> interior(G.num_triangles(), 0);
  for (int t = 0; t < G.num_triangles(); ++t) interior[t] = G.label(t) == Subdomain::inner;
  CHECK(assemble_boundary_mass(G, d, interior).nonZeros() == 0);
}

TEST_CASE("sparse solver contract") {
  const SparseComplexMatrix I = sparse_identity(5);
  ComplexVector b(5);
  b << 1, 2, 3, 4, 5;
  CHECK((solve_sparse(I, b) - b).norm() == 0.0);

  SparseComplexMatrix D = Complex(0.0, 2.0) * sparse_identity(4);
  const ComplexVector x = solve_sparse(D, ComplexVector(ComplexVector::Ones(4)));
  CHECK((x - ComplexVector::Constant(4, Complex(1.0) / Complex(0.0, 2.0))).norm() < 1e-15);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int i = 0; i < 50; ++i) {
    trip.emplace_back(i, i, Complex(10.0, 1.0));
    for (int k = 0; k < 3; ++k) trip.emplace_back(i, static_cast<int>(rng() % 50), Complex(u(rng), u(rng)));
  }
  SparseComplexMatrix A(50, 50);
  A.setFromTriplets(trip.begin(), trip.end());
  const ComplexVector rhs = lod2s::testing::random_vector(50, rng);
  const ComplexVector y = solve_sparse(A, rhs);
  CHECK((A * y - rhs).norm() <= 1e-10 * rhs.norm());

  SparseComplexMatrix Z(3, 3);
  CHECK_THROWS_AS(solve_sparse(Z, ComplexVector(ComplexVector::Ones(3))), SolverError);
}

TEST_CASE("boundary load") {
  const auto G = build_structured_mesh(SquareDomain::macro(1.0, 0.5), 4);
  const DofMap d = build_dofmap(G, SpaceKind::free);
  const auto one = [](const Eigen::Vector2d&, const Eigen::Vector2d&) { return Complex(1.0); };
  CHECK(boundary_load(G, d, one).sum().real() == doctest::Approx(4.0));

  const BoundaryDatum g = BoundaryDatum::plane_wave(6.0);
  const ComplexVector f4 = boundary_load(G, d, g.function(), 4);
  const ComplexVector f12 = boundary_load(G, d, g.function(), 12);
  CHECK((f4 - f12).norm() < 1e-6 * f12.norm());
  // the plane wave datum vanishes on the side where d.n = 1
  for (const auto& e : G.boundary_edges())
    if (e.tag == 1) {
      const Eigen::Vector2d x = G.vertex(e.a);
      CHECK(std::abs(g.function()(x, Eigen::Vector2d(1.0, 0.0))) < 1e-15);
    }
}

TEST_CASE("gradient and integral operators") {
  const auto Y = build_structured_mesh(SquareDomain::cell(0.5), 4);
  const DofMap star = build_dofmap(Y, SpaceKind::periodic_zero_mean);
  // periodic functions have zero mean gradient
  CHECK(gradient_integrals(Y, star).rowwise().sum().norm() < 1e-14);
  CHECK(basis_integrals(Y, star).sum() == doctest::Approx(0.75));
  const DofMap incl = build_dofmap(Y, SpaceKind::zero_trace);
  CHECK(basis_integrals(Y, incl).sum() < 0.25);
}
