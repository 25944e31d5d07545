#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "lod2s/types.hpp"

namespace lod2s {

/// Two-way partition carried by every mesh. On the macroscopic domain G the
/// inner part is Omega; on the unit cell Y the inner part is the inclusion D
/// and the outer part is Y*.
enum class Subdomain : int { outer = 0, inner = 1 };

/// Macro meshes live on G, cell meshes on the periodic unit cell Y. Patches on
/// cell meshes never cross the interface between Y* and D.
enum class MeshKind { macro, cell };

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int triangle = 0;  // owning triangle
  int tag = 0;       // 0 bottom, 1 right, 2 top, 3 left, -1 unclassified
};

/// Axis-aligned square with an optional axis-aligned inner square.
struct SquareDomain {
  MeshKind kind = MeshKind::macro;
  Eigen::Vector2d lower{0.0, 0.0};
  double side = 1.0;
  Eigen::Vector2d inner_lower{0.25, 0.25};
  double inner_side = 0.5;  // 0 disables the inner square

  /// G = [0, side]^2 with Omega centered and of side `omega_side`.
  static SquareDomain macro(double side = 1.0, double omega_side = 0.5);
  /// Y = [-1/2, 1/2)^2 with D centered and of side `inclusion_side`.
  static SquareDomain cell(double inclusion_side = 0.5);
};

/// Conforming simplicial mesh with subdomain labels, optional torus
/// identification of opposite sides and an optional link to a coarser mesh.
///
/// Periodic meshes store the vertices on the upper sides geometrically; each
/// of them is paired with its canonical image on the lower sides. All
/// topological queries (incidence, patches, dofs) work on canonical vertices.
class Triangulation2D {
 public:
  Triangulation2D() = default;
  Triangulation2D(MeshKind kind, std::vector<Eigen::Vector2d> vertices,
                  std::vector<std::array<int, 3>> triangles, std::vector<Subdomain> labels,
                  std::vector<std::pair<int, int>> periodic_map = {},
                  std::vector<int> refinement_parent = {});

  MeshKind kind() const { return kind_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  const Eigen::Vector2d& vertex(int v) const { return vertices_[v]; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const std::vector<Subdomain>& labels() const { return labels_; }
  Subdomain label(int t) const { return labels_[t]; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<std::pair<int, int>>& periodic_map() const { return periodic_map_; }
  const std::vector<int>& refinement_parent() const { return parent_; }
  bool periodic() const { return !periodic_map_.empty(); }
  bool has_parent() const { return !parent_.empty(); }

  /// Canonical (torus) representative of a vertex; identity when not periodic.
  int canonical(int v) const { return canonical_[v]; }
  /// Triangles incident to a canonical vertex, evaluated on the torus.
  const std::vector<int>& incident(int canonical_vertex) const { return incident_[canonical_vertex]; }
  /// Triangles incident to a vertex without periodic identification.
  const std::vector<int>& incident_raw(int v) const { return incident_raw_[v]; }

  double area(int t) const;
  double diameter(int t) const;
  Eigen::Vector2d centroid(int t) const;
  /// Largest triangle diameter.
  double mesh_size() const { return mesh_size_; }
  /// Ratio circumradius / inradius maximized over all triangles.
  double shape_regularity() const;
  /// Number of distinct canonical vertices.
  int num_canonical_vertices() const { return num_canonical_; }
  double subdomain_area(Subdomain s) const;

 private:
  void finalize();

  MeshKind kind_ = MeshKind::macro;
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Subdomain> labels_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<std::pair<int, int>> periodic_map_;
  std::vector<int> parent_;
  std::vector<int> canonical_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<int>> incident_raw_;
  double mesh_size_ = 0.0;
  int num_canonical_ = 0;
};

/// Criss-cross mesh of a square: every grid cell split into four triangles by
/// both diagonals. Cell meshes are made periodic. Throws AlignmentError when
/// the inner square does not lie on grid lines.
Triangulation2D build_structured_mesh(const SquareDomain& domain, int n);

/// Red refinement applied `levels` times; the parent map refers to the input
/// mesh and labels/periodicity are inherited.
Triangulation2D refine_uniform(const Triangulation2D& mesh, int levels);

struct Patch {
  std::vector<int> seed;
  int order = 0;
  std::vector<int> members;  // sorted triangle indices
  bool wrapped = false;      // true when the periodic continuation added members

  bool contains(int t) const;
};

/// First order neighbourhood: all triangles sharing at least a vertex with
/// the seed. On cell meshes membership is restricted to the subdomain of the
/// seed triangle it is reached from.
Patch neighborhood(const Triangulation2D& mesh, std::span<const int> seed);

/// Iterated neighbourhood; m = 0 returns the seed.
Patch patch(const Triangulation2D& mesh, std::span<const int> seed, int m);

/// max over triangles T of the number of triangles in the m-th order patch.
int overlap_constant(const Triangulation2D& mesh, int m);

/// Characteristic mask (one byte per triangle) of a triangle set.
std::vector<char> triangle_mask(const Triangulation2D& mesh, std::span<const int> triangles);

/// Plain-text mesh format: header `vertices N triangles M`, then N lines
/// `x y`, M lines `i j k label` and an optional `periodic P` block of
/// `image canonical` vertex pairs. Doubles are written in shortest
/// round-trip form.
void write_mesh(std::ostream& os, const Triangulation2D& mesh);
Triangulation2D read_mesh(std::istream& is);

}  // namespace lod2s
