#include "tmsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace tmsim {

namespace {

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct DirectedEdge {
  int from;
  int to;
  std::size_t tri;
};

}  // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

SurfaceMesh::SurfaceMesh(std::vector<Vec3> vertices,
                         std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.empty() || triangles_.empty()) {
    throw MeshError(MeshError::Kind::parse, "mesh has no vertices or no triangles");
  }
  const int nv = static_cast<int>(vertices_.size());

  areas_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int idx : tri) {
      if (idx < 0 || idx >= nv) {
        throw MeshError(MeshError::Kind::invalid_index,
                        "triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(idx) + " outside [0, " +
                            std::to_string(nv) + ")");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshError(MeshError::Kind::degenerate,
                      "triangle " + std::to_string(t) + " repeats a vertex");
    }
    areas_[t] = triangle_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (!(areas_[t] > kMinTriangleArea)) {
      throw MeshError(MeshError::Kind::degenerate,
                      "triangle " + std::to_string(t) + " has area " +
                          std::to_string(areas_[t]) + " <= 1e-14");
    }
  }

  // Group directed edges by their undirected key.
  std::vector<std::pair<std::uint64_t, DirectedEdge>> edges;
  edges.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      edges.push_back({edge_key(std::min(a, b), std::max(a, b)), {a, b, t}});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<std::pair<int, int>> undirected;
  undirected.reserve(edges.size() / 2);
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j].first == edges[i].first) ++j;
    const auto count = j - i;
    const auto& e = edges[i].second;
    const std::string name = "edge (" + std::to_string(std::min(e.from, e.to)) +
                             ", " + std::to_string(std::max(e.from, e.to)) + ")";
    if (count == 1) {
      throw MeshError(MeshError::Kind::not_closed,
                      "surface not closed: " + name + " belongs to triangle " +
                          std::to_string(e.tri) + " only");
    }
    if (count > 2) {
      throw MeshError(MeshError::Kind::non_manifold,
                      "non-manifold " + name + " shared by " +
                          std::to_string(count) + " triangles");
    }
    if (edges[i].second.from == edges[i + 1].second.from) {
      throw MeshError(MeshError::Kind::inconsistent_orientation,
                      "inconsistent orientation across " + name + " (triangles " +
                          std::to_string(edges[i].second.tri) + " and " +
                          std::to_string(edges[i + 1].second.tri) + ")");
    }
    undirected.emplace_back(std::min(e.from, e.to), std::max(e.from, e.to));
    i = j;
  }

  if (!(enclosed_volume(*this) > 0.0)) {
    throw MeshError(MeshError::Kind::inverted,
                    "inverted orientation: enclosed signed volume is not positive");
  }

  ring_offsets_.assign(vertices_.size() + 1, 0);
  for (const auto& [a, b] : undirected) {
    ++ring_offsets_[a + 1];
    ++ring_offsets_[b + 1];
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    ring_offsets_[i + 1] += ring_offsets_[i];
  }
  ring_indices_.resize(ring_offsets_.back());
  std::vector<std::size_t> fill(ring_offsets_.begin(), ring_offsets_.end() - 1);
  for (const auto& [a, b] : undirected) {
    ring_indices_[fill[a]++] = b;
    ring_indices_[fill[b]++] = a;
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    std::sort(ring_indices_.begin() + static_cast<std::ptrdiff_t>(ring_offsets_[i]),
              ring_indices_.begin() + static_cast<std::ptrdiff_t>(ring_offsets_[i + 1]));
  }
}

SurfaceMesh SurfaceMesh::scaled(double factor) const {
  auto v = vertices_;
  for (auto& x : v) x *= factor;
  return SurfaceMesh(std::move(v), triangles_);
}

SurfaceMesh SurfaceMesh::translated(const Vec3& offset) const {
  auto v = vertices_;
  for (auto& x : v) x += offset;
  return SurfaceMesh(std::move(v), triangles_);
}

SurfaceMesh icosphere(int level) {
  if (level < 0 || level > kMaxIcosphereLevel) {
    throw std::invalid_argument("icosphere level " + std::to_string(level) +
                                " outside the supported range [0, " +
                                std::to_string(kMaxIcosphereLevel) + "]");
  }

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> vertices = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : vertices) v.normalize();

  std::vector<Triangle> triangles = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int l = 0; l < level; ++l) {
    std::unordered_map<std::uint64_t, int> midpoint;
    midpoint.reserve(triangles.size() * 3 / 2);
    auto mid = [&](int a, int b) {
      const auto key = edge_key(std::min(a, b), std::max(a, b));
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(vertices.size());
      vertices.push_back((0.5 * (vertices[a] + vertices[b])).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };

    std::vector<Triangle> refined;
    refined.reserve(4 * triangles.size());
    for (const auto& [a, b, c] : triangles) {
      const int ab = mid(a, b);
      const int bc = mid(b, c);
      const int ca = mid(c, a);
      refined.push_back({a, ab, ca});
      refined.push_back({b, bc, ab});
      refined.push_back({c, ca, bc});
      refined.push_back({ab, bc, ca});
    }
    triangles = std::move(refined);
  }

  return SurfaceMesh(std::move(vertices), std::move(triangles));
}

namespace {

// Next non-empty, non-comment line.
bool next_line(std::istringstream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

[[noreturn]] void parse_fail(std::size_t lineno, const std::string& msg) {
  throw MeshError(MeshError::Kind::parse,
                  "OFF parse error at line " + std::to_string(lineno) + ": " + msg);
}

}  // namespace

SurfaceMesh parse_off(const std::string& contents) {
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;

  if (!next_line(in, line, lineno)) parse_fail(lineno, "empty file");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") parse_fail(lineno, "expected header 'OFF', got '" + magic + "'");

  // Counts may share the header line.
  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!next_line(in, line, lineno)) parse_fail(lineno, "missing counts line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) parse_fail(lineno, "malformed counts line");
    counts >> ne;
  }
  if (nv <= 0 || nf <= 0) parse_fail(lineno, "vertex and face counts must be positive");

  std::vector<Vec3> vertices(static_cast<std::size_t>(nv));
  for (auto& v : vertices) {
    if (!next_line(in, line, lineno)) parse_fail(lineno, "unexpected end of vertex list");
    std::istringstream row(line);
    if (!(row >> v.x() >> v.y() >> v.z())) parse_fail(lineno, "malformed vertex");
  }

  std::vector<Triangle> triangles(static_cast<std::size_t>(nf));
  for (auto& t : triangles) {
    if (!next_line(in, line, lineno)) parse_fail(lineno, "unexpected end of face list");
    std::istringstream row(line);
    int arity = 0;
    if (!(row >> arity)) parse_fail(lineno, "malformed face");
    if (arity != 3) parse_fail(lineno, "only triangular faces are supported");
    if (!(row >> t[0] >> t[1] >> t[2])) parse_fail(lineno, "malformed face indices");
  }

  return SurfaceMesh(std::move(vertices), std::move(triangles));
}

SurfaceMesh load_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError(MeshError::Kind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_off(buffer.str());
}

std::string to_off(const SurfaceMesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' '
      << mesh.num_edges() << '\n';
  for (const auto& v : mesh.vertices()) {
    out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& t : mesh.triangles()) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  return out.str();
}

void write_off(const SurfaceMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshError(MeshError::Kind::io, "cannot write " + path.string());
  out << to_off(mesh);
}

double surface_area(const SurfaceMesh& mesh) {
  double total = 0.0;
  for (double a : mesh.triangle_areas()) total += a;
  return total;
}

double enclosed_volume(const SurfaceMesh& mesh) {
  // Reference point at the vertex centroid keeps the terms small for
  // translated meshes; the sum is independent of it for closed surfaces.
  Vec3 ref = Vec3::Zero();
  for (const auto& v : mesh.vertices()) ref += v;
  ref /= static_cast<double>(mesh.num_vertices());

  double total = 0.0;
  for (const auto& [a, b, c] : mesh.triangles()) {
    const Vec3 pa = mesh.vertex(a) - ref;
    const Vec3 pb = mesh.vertex(b) - ref;
    const Vec3 pc = mesh.vertex(c) - ref;
    total += pa.dot(pb.cross(pc));
  }
  return total / 6.0;
}

std::vector<double> vertex_areas(const SurfaceMesh& mesh) {
  std::vector<double> areas(mesh.num_vertices(), 0.0);
  const auto tri_areas = mesh.triangle_areas();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    for (int idx : mesh.triangle(t)) areas[idx] += tri_areas[t] / 3.0;
  }
  return areas;
}

}  // namespace tmsim
