#include "lod2s/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

namespace lod2s {

namespace {

constexpr double kGeomTol = 1e-9;

std::int64_t quantize(double x, double unit) { return static_cast<std::int64_t>(std::llround(x / unit)); }

struct Bounds {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;
};

Bounds bounding_box(const std::vector<Eigen::Vector2d>& v) {
  Bounds b{v.front(), v.front()};
  for (const auto& p : v) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

// Pair every vertex on the upper sides of the bounding square with the vertex
// at its wrapped position on the lower sides.
std::vector<std::pair<int, int>> periodic_pairs(const std::vector<Eigen::Vector2d>& vertices) {
  const Bounds b = bounding_box(vertices);
  const Eigen::Vector2d len = b.hi - b.lo;
  const double unit = kGeomTol * std::max(len.x(), len.y());
  std::map<std::pair<std::int64_t, std::int64_t>, int> lookup;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v)
    lookup.emplace(std::make_pair(quantize(vertices[v].x(), unit), quantize(vertices[v].y(), unit)), v);

  std::vector<std::pair<int, int>> pairs;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v) {
    Eigen::Vector2d p = vertices[v];
    bool moved = false;
    if (std::abs(p.x() - b.hi.x()) < unit) {
      p.x() = b.lo.x();
      moved = true;
    }
    if (std::abs(p.y() - b.hi.y()) < unit) {
      p.y() = b.lo.y();
      moved = true;
    }
    if (!moved) continue;
    auto it = lookup.find({quantize(p.x(), unit), quantize(p.y(), unit)});
    if (it == lookup.end())
      throw ConfigurationError("periodic mesh: no matching vertex for boundary vertex " + std::to_string(v));
    pairs.emplace_back(v, it->second);
  }
  return pairs;
}

bool on_grid(double x, double lower, double step) {
  const double r = (x - lower) / step;
  return std::abs(r - std::round(r)) < 1e-9;
}

}  // namespace

SquareDomain SquareDomain::macro(double side, double omega_side) {
  SquareDomain d;
  d.kind = MeshKind::macro;
  d.lower = {0.0, 0.0};
  d.side = side;
  d.inner_side = omega_side;
  d.inner_lower = Eigen::Vector2d::Constant(0.5 * (side - omega_side));
  return d;
}

SquareDomain SquareDomain::cell(double inclusion_side) {
  SquareDomain d;
  d.kind = MeshKind::cell;
  d.lower = {-0.5, -0.5};
  d.side = 1.0;
  d.inner_side = inclusion_side;
  d.inner_lower = Eigen::Vector2d::Constant(-0.5 * inclusion_side);
  return d;
}

Triangulation2D::Triangulation2D(MeshKind kind, std::vector<Eigen::Vector2d> vertices,
                                 std::vector<std::array<int, 3>> triangles, std::vector<Subdomain> labels,
                                 std::vector<std::pair<int, int>> periodic_map, std::vector<int> refinement_parent)
    : kind_(kind),
      vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      labels_(std::move(labels)),
      periodic_map_(std::move(periodic_map)),
      parent_(std::move(refinement_parent)) {
  if (labels_.size() != triangles_.size()) throw ArgumentError("mesh: one label per triangle required");
  if (!parent_.empty() && parent_.size() != triangles_.size())
    throw ArgumentError("mesh: refinement parent must cover every triangle");
  finalize();
}

void Triangulation2D::finalize() {
  const int nv = num_vertices();
  for (const auto& t : triangles_)
    for (int v : t)
      if (v < 0 || v >= nv) throw ArgumentError("mesh: triangle references missing vertex");

  canonical_.resize(nv);
  std::iota(canonical_.begin(), canonical_.end(), 0);
  for (auto [image, target] : periodic_map_) {
    if (image < 0 || image >= nv || target < 0 || target >= nv)
      throw ArgumentError("mesh: periodic pair out of range");
    canonical_[image] = target;
  }
  // resolve chains so every vertex points at a fixed point
  for (int v = 0; v < nv; ++v) {
    int c = v;
    int guard = 0;
    while (canonical_[c] != c) {
      c = canonical_[c];
      if (++guard > nv) throw ArgumentError("mesh: cyclic periodic map");
    }
    canonical_[v] = c;
  }
  num_canonical_ = 0;
  for (int v = 0; v < nv; ++v)
    if (canonical_[v] == v) ++num_canonical_;

  incident_.assign(nv, {});
  incident_raw_.assign(nv, {});
  mesh_size_ = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles_[t]) {
      incident_raw_[v].push_back(t);
      auto& inc = incident_[canonical_[v]];
      if (inc.empty() || inc.back() != t) inc.push_back(t);
    }
    mesh_size_ = std::max(mesh_size_, diameter(t));
  }
  for (auto& inc : incident_) {
    std::sort(inc.begin(), inc.end());
    inc.erase(std::unique(inc.begin(), inc.end()), inc.end());
  }

  std::map<std::pair<int, int>, std::pair<int, int>> edges;  // key -> (count, owner)
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      auto& entry = edges[{std::min(a, b), std::max(a, b)}];
      ++entry.first;
      entry.second = t;
    }
  }
  boundary_edges_.clear();
  if (nv == 0) return;
  const Bounds box = bounding_box(vertices_);
  const double tol = kGeomTol * std::max(1.0, (box.hi - box.lo).maxCoeff());
  for (const auto& [key, entry] : edges) {
    if (entry.first != 1) continue;
    BoundaryEdge be;
    // keep the orientation of the owning triangle
    const auto& tri = triangles_[entry.second];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (std::min(a, b) == key.first && std::max(a, b) == key.second) {
        be.a = a;
        be.b = b;
      }
    }
    be.triangle = entry.second;
    const Eigen::Vector2d& p = vertices_[be.a];
    const Eigen::Vector2d& q = vertices_[be.b];
    if (std::abs(p.y() - box.lo.y()) < tol && std::abs(q.y() - box.lo.y()) < tol)
      be.tag = 0;
    else if (std::abs(p.x() - box.hi.x()) < tol && std::abs(q.x() - box.hi.x()) < tol)
      be.tag = 1;
    else if (std::abs(p.y() - box.hi.y()) < tol && std::abs(q.y() - box.hi.y()) < tol)
      be.tag = 2;
    else if (std::abs(p.x() - box.lo.x()) < tol && std::abs(q.x() - box.lo.x()) < tol)
      be.tag = 3;
    else
      be.tag = -1;
    boundary_edges_.push_back(be);
  }
}

double Triangulation2D::area(int t) const {
  const auto& tri = triangles_[t];
  const Eigen::Vector2d e1 = vertices_[tri[1]] - vertices_[tri[0]];
  const Eigen::Vector2d e2 = vertices_[tri[2]] - vertices_[tri[0]];
  return 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
}

double Triangulation2D::diameter(int t) const {
  const auto& tri = triangles_[t];
  double d = 0.0;
  for (int e = 0; e < 3; ++e) d = std::max(d, (vertices_[tri[e]] - vertices_[tri[(e + 1) % 3]]).norm());
  return d;
}

Eigen::Vector2d Triangulation2D::centroid(int t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

double Triangulation2D::shape_regularity() const {
  double worst = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    const double a = (vertices_[tri[1]] - vertices_[tri[2]]).norm();
    const double b = (vertices_[tri[0]] - vertices_[tri[2]]).norm();
    const double c = (vertices_[tri[0]] - vertices_[tri[1]]).norm();
    const double A = area(t);
    const double circum = a * b * c / (4.0 * A);
    const double in = 2.0 * A / (a + b + c);
    worst = std::max(worst, circum / in);
  }
  return worst;
}

double Triangulation2D::subdomain_area(Subdomain s) const {
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t)
    if (labels_[t] == s) sum += area(t);
  return sum;
}

Triangulation2D build_structured_mesh(const SquareDomain& domain, int n) {
  if (n < 2) throw ArgumentError("build_structured_mesh: n must be at least 2");
  if (!(domain.side > 0.0)) throw ArgumentError("build_structured_mesh: side must be positive");
  const double h = domain.side / n;
  const bool has_inner = domain.inner_side > 0.0;
  if (has_inner) {
    const Eigen::Vector2d upper = domain.inner_lower + Eigen::Vector2d::Constant(domain.inner_side);
    for (int d = 0; d < 2; ++d) {
      if (!on_grid(domain.inner_lower[d], domain.lower[d], h) || !on_grid(upper[d], domain.lower[d], h))
        throw AlignmentError("build_structured_mesh: inner square does not lie on grid lines for n = " +
                             std::to_string(n));
      if (domain.inner_lower[d] <= domain.lower[d] + 0.5 * h ||
          upper[d] >= domain.lower[d] + domain.side - 0.5 * h)
        throw AlignmentError("build_structured_mesh: inner square must lie strictly inside the domain");
    }
  }

  std::vector<Eigen::Vector2d> vertices;
  vertices.reserve((n + 1) * (n + 1) + n * n);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) vertices.push_back(domain.lower + Eigen::Vector2d(i * h, j * h));
  const int centers = static_cast<int>(vertices.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) vertices.push_back(domain.lower + Eigen::Vector2d((i + 0.5) * h, (j + 0.5) * h));

  auto grid = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> triangles;
  std::vector<Subdomain> labels;
  triangles.reserve(4 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int c = centers + j * n + i;
      const int v00 = grid(i, j), v10 = grid(i + 1, j), v11 = grid(i + 1, j + 1), v01 = grid(i, j + 1);
      Subdomain s = Subdomain::outer;
      if (has_inner) {
        const Eigen::Vector2d mid = vertices[c] - domain.inner_lower;
        if (mid.x() > 0.0 && mid.y() > 0.0 && mid.x() < domain.inner_side && mid.y() < domain.inner_side)
          s = Subdomain::inner;
      }
      for (auto tri : {std::array<int, 3>{v00, v10, c}, std::array<int, 3>{v10, v11, c},
                       std::array<int, 3>{v11, v01, c}, std::array<int, 3>{v01, v00, c}}) {
        triangles.push_back(tri);
        labels.push_back(s);
      }
    }
  }
  std::vector<std::pair<int, int>> pmap;
  if (domain.kind == MeshKind::cell) pmap = periodic_pairs(vertices);
  return Triangulation2D(domain.kind, std::move(vertices), std::move(triangles), std::move(labels), std::move(pmap));
}

Triangulation2D refine_uniform(const Triangulation2D& mesh, int levels) {
  if (levels < 0) throw ArgumentError("refine_uniform: levels must be nonnegative");
  std::vector<int> parent(mesh.num_triangles());
  std::iota(parent.begin(), parent.end(), 0);
  if (levels == 0)
    return Triangulation2D(mesh.kind(), mesh.vertices(), mesh.triangles(), mesh.labels(), mesh.periodic_map(),
                           std::move(parent));

  std::vector<Eigen::Vector2d> vertices = mesh.vertices();
  std::vector<std::array<int, 3>> triangles = mesh.triangles();
  std::vector<Subdomain> labels = mesh.labels();
  for (int level = 0; level < levels; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int id = static_cast<int>(vertices.size());
      vertices.push_back(0.5 * (vertices[a] + vertices[b]));
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> fine;
    std::vector<Subdomain> fine_labels;
    std::vector<int> fine_parent;
    fine.reserve(4 * triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      const auto [a, b, c] = triangles[t];
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      for (auto tri : {std::array<int, 3>{a, ab, ca}, std::array<int, 3>{ab, b, bc}, std::array<int, 3>{ca, bc, c},
                       std::array<int, 3>{ab, bc, ca}}) {
        fine.push_back(tri);
        fine_labels.push_back(labels[t]);
        fine_parent.push_back(parent[t]);
      }
    }
    triangles = std::move(fine);
    labels = std::move(fine_labels);
    parent = std::move(fine_parent);
  }
  std::vector<std::pair<int, int>> pmap;
  if (mesh.periodic()) pmap = periodic_pairs(vertices);
  return Triangulation2D(mesh.kind(), std::move(vertices), std::move(triangles), std::move(labels), std::move(pmap),
                         std::move(parent));
}

bool Patch::contains(int t) const { return std::binary_search(members.begin(), members.end(), t); }

Patch neighborhood(const Triangulation2D& mesh, std::span<const int> seed) {
  if (seed.empty()) throw ArgumentError("neighborhood: empty seed");
  std::vector<char> in(mesh.num_triangles(), 0);
  Patch p;
  p.order = 1;
  for (int t : seed) {
    if (t < 0 || t >= mesh.num_triangles()) throw ArgumentError("neighborhood: triangle index out of range");
    p.seed.push_back(t);
    in[t] = 1;
  }
  std::sort(p.seed.begin(), p.seed.end());
  p.seed.erase(std::unique(p.seed.begin(), p.seed.end()), p.seed.end());
  const bool restrict = mesh.kind() == MeshKind::cell;
  std::vector<char> raw(mesh.num_triangles(), 0);
  for (int t : p.seed)
    for (int v : mesh.triangle(t))
      for (int k : mesh.incident_raw(v)) raw[k] = 1;
  for (int t : p.seed) {
    for (int v : mesh.triangle(t)) {
      for (int k : mesh.incident(mesh.canonical(v))) {
        if (restrict && mesh.label(k) != mesh.label(t)) continue;
        if (!in[k] && !raw[k]) p.wrapped = true;
        in[k] = 1;
      }
    }
  }
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (in[t]) p.members.push_back(t);
  return p;
}

Patch patch(const Triangulation2D& mesh, std::span<const int> seed, int m) {
  if (m < 0) throw ArgumentError("patch: order must be nonnegative");
  if (seed.empty()) throw ArgumentError("patch: empty seed");
  Patch p;
  p.seed.assign(seed.begin(), seed.end());
  std::sort(p.seed.begin(), p.seed.end());
  p.seed.erase(std::unique(p.seed.begin(), p.seed.end()), p.seed.end());
  for (int t : p.seed)
    if (t < 0 || t >= mesh.num_triangles()) throw ArgumentError("patch: triangle index out of range");
  p.members = p.seed;
  for (int i = 0; i < m; ++i) {
    const std::size_t before = p.members.size();
    Patch next = neighborhood(mesh, p.members);
    p.members = std::move(next.members);
    p.wrapped = p.wrapped || next.wrapped;
    if (p.members.size() == before) break;  // saturated
  }
  p.order = m;
  return p;
}

int overlap_constant(const Triangulation2D& mesh, int m) {
  int best = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const int seed[1] = {t};
    best = std::max(best, static_cast<int>(patch(mesh, seed, m).members.size()));
  }
  return best;
}

std::vector<char> triangle_mask(const Triangulation2D& mesh, std::span<const int> triangles) {
  std::vector<char> mask(mesh.num_triangles(), 0);
  for (int t : triangles) mask.at(t) = 1;
  return mask;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ArgumentError("read_mesh: bad number '" + s + "'");
  return x;
}

}  // namespace

void write_mesh(std::ostream& os, const Triangulation2D& mesh) {
  os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  for (const auto& v : mesh.vertices()) os << format_double(v.x()) << ' ' << format_double(v.y()) << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    os << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << static_cast<int>(mesh.label(t)) << '\n';
  }
  if (mesh.periodic()) {
    os << "periodic " << mesh.periodic_map().size() << '\n';
    for (auto [a, b] : mesh.periodic_map()) os << a << ' ' << b << '\n';
  }
}

Triangulation2D read_mesh(std::istream& is) {
  std::string word;
  int nv = -1, nt = -1;
  if (!(is >> word) || word != "vertices" || !(is >> nv)) throw ArgumentError("read_mesh: expected 'vertices N'");
  if (!(is >> word)) throw ArgumentError("read_mesh: truncated header");
  if (word == "/" && !(is >> word)) throw ArgumentError("read_mesh: truncated header");
  if (word != "triangles" || !(is >> nt) || nv < 0 || nt < 0) throw ArgumentError("read_mesh: expected 'triangles M'");

  std::vector<Eigen::Vector2d> vertices(nv);
  for (int v = 0; v < nv; ++v) {
    std::string x, y;
    if (!(is >> x >> y)) throw ArgumentError("read_mesh: truncated vertex block");
    vertices[v] = {parse_double(x), parse_double(y)};
  }
  std::vector<std::array<int, 3>> triangles(nt);
  std::vector<Subdomain> labels(nt);
  for (int t = 0; t < nt; ++t) {
    int label = 0;
    if (!(is >> triangles[t][0] >> triangles[t][1] >> triangles[t][2] >> label))
      throw ArgumentError("read_mesh: truncated triangle block");
    if (label != 0 && label != 1) throw ArgumentError("read_mesh: label must be 0 or 1");
    labels[t] = static_cast<Subdomain>(label);
  }
  std::vector<std::pair<int, int>> pmap;
  if (is >> word) {
    int np = 0;
    if (word != "periodic" || !(is >> np) || np < 0) throw ArgumentError("read_mesh: expected 'periodic P'");
    pmap.resize(np);
    for (auto& [a, b] : pmap)
      if (!(is >> a >> b)) throw ArgumentError("read_mesh: truncated periodic block");
  }
  const MeshKind kind = pmap.empty() ? MeshKind::macro : MeshKind::cell;
  return Triangulation2D(kind, std::move(vertices), std::move(triangles), std::move(labels), std::move(pmap));
}

}  // namespace lod2s
