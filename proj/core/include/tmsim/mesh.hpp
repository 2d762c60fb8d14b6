#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tmsim {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

/// Smallest admissible triangle area; anything below is treated as collapsed.
inline constexpr double kMinTriangleArea = 1e-14;

/// Largest icosphere refinement level accepted by icosphere().
inline constexpr int kMaxIcosphereLevel = 8;

class MeshError : public std::runtime_error {
 public:
  enum class Kind {
    parse,           // malformed file contents
    io,              // file could not be opened
    invalid_index,   // face references a vertex that does not exist
    degenerate,      // triangle area below kMinTriangleArea
    not_closed,      // an edge is used by a single triangle
    non_manifold,    // an edge is used by more than two triangles
    inconsistent_orientation,
    inverted,        // consistently oriented, but normals point inward
  };

  MeshError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Closed, orientable, outward-oriented triangle surface.
///
/// Immutable after construction. The constructor checks every structural
/// invariant and throws MeshError when one fails, so any SurfaceMesh value in
/// the program is a valid closed surface with positive enclosed volume.
class SurfaceMesh {
 public:
  SurfaceMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Vec3& vertex(std::size_t i) const { return vertices_[i]; }
  const Triangle& triangle(std::size_t t) const { return triangles_[t]; }

  std::span<const double> triangle_areas() const { return areas_; }

  /// Sorted one-ring neighbours of vertex i.
  std::span<const int> neighbors(std::size_t i) const {
    return {ring_indices_.data() + ring_offsets_[i],
            ring_indices_.data() + ring_offsets_[i + 1]};
  }

  /// Unordered edge count (each shared by exactly two triangles).
  std::size_t num_edges() const { return ring_indices_.size() / 2; }

  SurfaceMesh scaled(double factor) const;
  SurfaceMesh translated(const Vec3& offset) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<double> areas_;
  std::vector<std::size_t> ring_offsets_;
  std::vector<int> ring_indices_;
};

/// Icosahedron refined `level` times by 1->4 midpoint subdivision, with every
/// new vertex projected back to the unit sphere.
SurfaceMesh icosphere(int level);

SurfaceMesh load_off(const std::filesystem::path& path);
SurfaceMesh parse_off(const std::string& contents);
void write_off(const SurfaceMesh& mesh, const std::filesystem::path& path);
std::string to_off(const SurfaceMesh& mesh);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

double surface_area(const SurfaceMesh& mesh);

/// Signed volume enclosed by the surface (sum of origin tetrahedra).
double enclosed_volume(const SurfaceMesh& mesh);

/// Lumped (barycentric) vertex areas: one third of each incident triangle.
std::vector<double> vertex_areas(const SurfaceMesh& mesh);

}  // namespace tmsim
