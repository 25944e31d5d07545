#include <map>
#include <random>
#include <set>
#include <sstream>

#include "common.hpp"

using namespace lod2s;

namespace {

// 4 x 4 criss-cross mesh of [0,4]^2 without inner square
Triangulation2D figure_mesh() { return build_structured_mesh(SquareDomain::macro(4.0, 0.0), 4); }

// the triangle with vertices (1.5, 1.5), (2, 2), (2, 1)
int figure_triangle(const Triangulation2D& mesh) {
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if ((mesh.centroid(t) - Eigen::Vector2d(11.0 / 6.0, 1.5)).norm() < 1e-12) return t;
  return -1;
}

}  // namespace

TEST_CASE("structured macro mesh counts") {
  const auto mesh = build_structured_mesh(SquareDomain::macro(1.0, 0.5), 4);
  CHECK(mesh.num_triangles() == 64);
  CHECK(mesh.num_vertices() == 41);
  CHECK_FALSE(mesh.periodic());
  CHECK(mesh.mesh_size() == doctest::Approx(0.25));
  CHECK(mesh.subdomain_area(Subdomain::inner) == doctest::Approx(0.25));
  CHECK(mesh.boundary_edges().size() == 16);
}

TEST_CASE("structured cell mesh is a torus") {
  const auto mesh = build_structured_mesh(SquareDomain::cell(0.5), 4);
  CHECK(mesh.num_triangles() == 64);
  CHECK(mesh.periodic());
  // 2n + 1 images on the upper sides: n on the top, n on the right, one corner
  CHECK(mesh.periodic_map().size() == 9);
  CHECK(mesh.num_canonical_vertices() == 32);
  CHECK(mesh.subdomain_area(Subdomain::inner) == doctest::Approx(0.25));
  CHECK(mesh.subdomain_area(Subdomain::outer) == doctest::Approx(0.75));
}

TEST_CASE("misaligned inclusion is rejected") {
  CHECK_THROWS_AS(build_structured_mesh(SquareDomain::cell(0.5), 3), AlignmentError);
  CHECK_THROWS_AS(build_structured_mesh(SquareDomain::macro(1.0, 0.3), 4), AlignmentError);
  CHECK_THROWS_AS(build_structured_mesh(SquareDomain::macro(1.0, 0.5), 2), AlignmentError);
}

TEST_CASE("uniform refinement") {
  const auto mesh = build_structured_mesh(SquareDomain::macro(1.0, 0.5), 4);
  const auto fine = refine_uniform(mesh, 1);
  CHECK(fine.num_triangles() == 256);
  REQUIRE(fine.has_parent());
  std::vector<int> count(mesh.num_triangles(), 0);
  for (int t = 0; t < fine.num_triangles(); ++t) {
    const int p = fine.refinement_parent()[t];
    ++count[p];
    CHECK(fine.label(t) == mesh.label(p));
    // children lie inside the parent
    CHECK(barycentric(mesh, p, fine.centroid(t)).minCoeff() > 0.0);
  }
  for (int c : count) CHECK(c == 4);

  const auto same = refine_uniform(mesh, 0);
  CHECK(same.num_triangles() == mesh.num_triangles());
  for (int t = 0; t < same.num_triangles(); ++t) CHECK(same.refinement_parent()[t] == t);
}

TEST_CASE("refined periodic mesh has no hanging nodes on the torus") {
  const auto mesh = refine_uniform(build_structured_mesh(SquareDomain::cell(0.5), 4), 2);
  CHECK(mesh.num_triangles() == 64 * 16);
  std::map<std::pair<int, int>, int> edges;
  for (const auto& tri : mesh.triangles())
    for (int a = 0; a < 3; ++a) {
      int u = mesh.canonical(tri[a]), v = mesh.canonical(tri[(a + 1) % 3]);
      if (u > v) std::swap(u, v);
      ++edges[{u, v}];
    }
  for (const auto& [e, n] : edges) CHECK(n == 2);
  // Euler characteristic of the torus
  CHECK(mesh.num_canonical_vertices() - static_cast<int>(edges.size()) + mesh.num_triangles() == 0);
}

TEST_CASE("first and second order patches of the reference triangle") {
  const auto mesh = figure_mesh();
  const int t = figure_triangle(mesh);
  REQUIRE(t >= 0);
  const int seed[1] = {t};
  CHECK(patch(mesh, seed, 0).members.size() == 1);
  CHECK(neighborhood(mesh, seed).members.size() == 15);
  CHECK(patch(mesh, seed, 1).members.size() == 15);
  CHECK(patch(mesh, seed, 2).members.size() == 42);
  CHECK(overlap_constant(mesh, 0) == 1);
  CHECK(overlap_constant(mesh, 1) == 15);
}

TEST_CASE("patches continue across the periodic boundary") {
  const auto torus = build_structured_mesh(SquareDomain::cell(0.0), 4);
  // every triangle of the torus sees the same neighbourhood sizes
  for (int t = 0; t < torus.num_triangles(); ++t) {
    const int seed[1] = {t};
    CHECK(patch(torus, seed, 1).members.size() == 15);
    CHECK(patch(torus, seed, 2).members.size() == 44);
  }
  // a triangle touching the lower side reaches across to the upper side
  int t = -1;
  for (int s = 0; s < torus.num_triangles() && t < 0; ++s)
    for (int v : torus.triangle(s))
      if (torus.vertex(v).y() == -0.5 && torus.vertex(v).x() > -0.4 && torus.vertex(v).x() < 0.4) t = s;
  REQUIRE(t >= 0);
  const int seed[1] = {t};
  const Patch p = neighborhood(torus, seed);
  CHECK(p.wrapped);
  bool crosses = false;
  for (int s : p.members) crosses = crosses || torus.centroid(s).y() > 0.25;
  CHECK(crosses);
}

TEST_CASE("patch saturation, nesting and label restriction") {
  const auto mesh = build_structured_mesh(SquareDomain::cell(0.5), 8);
  std::vector<int> all(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) all[t] = t;
  CHECK(patch(mesh, all, 3).members.size() == all.size());

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int seed[1] = {static_cast<int>(rng() % mesh.num_triangles())};
    const Subdomain label = mesh.label(seed[0]);
    std::vector<int> prev = patch(mesh, seed, 0).members;
    for (int m = 1; m <= 5; ++m) {
      const auto next = patch(mesh, seed, m).members;
      CHECK(std::includes(next.begin(), next.end(), prev.begin(), prev.end()));
      for (int s : next) CHECK(mesh.label(s) == label);
      prev = next;
    }
  }
  int n_inner = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) n_inner += mesh.label(t) == Subdomain::inner;
  int d_seed = 0;
  while (mesh.label(d_seed) != Subdomain::inner) ++d_seed;
  const int seed[1] = {d_seed};
  CHECK(static_cast<int>(patch(mesh, seed, 20).members.size()) == n_inner);

  for (int m = 0; m < 4; ++m) CHECK(overlap_constant(mesh, m) <= overlap_constant(mesh, m + 1));
  CHECK_THROWS_AS(patch(mesh, std::span<const int>(), 1), ArgumentError);
}

TEST_CASE("mesh text format round trip") {
  const auto mesh = refine_uniform(build_structured_mesh(SquareDomain::cell(0.5), 4), 1);
  std::stringstream ss;
  write_mesh(ss, mesh);
  const auto back = read_mesh(ss);
  CHECK(back.kind() == MeshKind::cell);
  REQUIRE(back.num_vertices() == mesh.num_vertices());
  REQUIRE(back.num_triangles() == mesh.num_triangles());
  for (int v = 0; v < mesh.num_vertices(); ++v) CHECK(back.vertex(v) == mesh.vertex(v));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    CHECK(back.triangle(t) == mesh.triangle(t));
    CHECK(back.label(t) == mesh.label(t));
  }
  CHECK(back.periodic_map() == mesh.periodic_map());

  std::stringstream slash("vertices 3 / triangles 1\n0 0\n1 0\n0 1\n0 1 2 0\n");
  const auto tri = read_mesh(slash);
  CHECK(tri.num_triangles() == 1);
  CHECK(tri.kind() == MeshKind::macro);
  CHECK(tri.area(0) == doctest::Approx(0.5));

  std::stringstream bad("vertices 2 triangles 1\n0 0\n1 0\n0 1 2 0\n");
  CHECK_THROWS(read_mesh(bad));
}

TEST_CASE("shape regularity of the criss-cross meshes is level independent") {
  const auto coarse = build_structured_mesh(SquareDomain::macro(1.0, 0.5), 4);
  const auto fine = refine_uniform(coarse, 2);
  CHECK(fine.shape_regularity() == doctest::Approx(coarse.shape_regularity()));
  CHECK(fine.mesh_size() == doctest::Approx(coarse.mesh_size() / 4));
}
