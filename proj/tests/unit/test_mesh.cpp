#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "tmsim/mesh.hpp"

using namespace tmsim;

namespace {

MeshError::Kind parse_kind(const std::string& text) {
  try {
    parse_off(text);
  } catch (const MeshError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no MeshError for:\n" << text;
  return MeshError::Kind::parse;
}

// Regular tetrahedron with outward faces.
const char* kTetra =
    "OFF\n4 4 6\n"
    "1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
    "3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

}  // namespace

TEST(Icosphere, CountsFollowSubdivision) {
  for (int level = 0; level <= 4; ++level) {
    const SurfaceMesh m = icosphere(level);
    const std::size_t p = std::size_t{1} << (2 * level);
    EXPECT_EQ(m.num_vertices(), 10 * p + 2);
    EXPECT_EQ(m.num_triangles(), 20 * p);
    EXPECT_EQ(m.num_edges(), 30 * p);
    const long euler = static_cast<long>(m.num_vertices()) - static_cast<long>(m.num_edges()) +
                       static_cast<long>(m.num_triangles());
    EXPECT_EQ(euler, 2);
  }
  EXPECT_EQ(icosphere(4).num_vertices(), 2562u);
  EXPECT_EQ(icosphere(4).num_triangles(), 5120u);
}

TEST(Icosphere, VerticesOnUnitSphereAndGeometryConverges) {
  double previous_gap = 1e300;
  for (int level = 1; level <= 5; ++level) {
    const SurfaceMesh m = icosphere(level);
    for (const auto& x : m.vertices()) EXPECT_NEAR(x.norm(), 1.0, 1e-14);
    const double area = surface_area(m);
    const double volume = enclosed_volume(m);
    EXPECT_LT(area, 4.0 * std::numbers::pi);
    EXPECT_LT(volume, 4.0 * std::numbers::pi / 3.0);
    EXPECT_GT(volume, 0.0);
    const double gap = 4.0 * std::numbers::pi - area;
    EXPECT_LT(gap, previous_gap);
    previous_gap = gap;
  }
  // Inscribed polyhedron error decays like h^2.
  EXPECT_LT(previous_gap / (4.0 * std::numbers::pi), 1e-3);
}

TEST(Icosphere, RejectsLevelsOutOfRange) {
  EXPECT_THROW(icosphere(-1), std::invalid_argument);
  EXPECT_THROW(icosphere(kMaxIcosphereLevel + 1), std::invalid_argument);
}

TEST(SurfaceMesh, NeighborsAreSortedAndSymmetric) {
  const SurfaceMesh m = icosphere(2);
  std::size_t total = 0;
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    const auto ring = m.neighbors(i);
    total += ring.size();
    EXPECT_TRUE(std::is_sorted(ring.begin(), ring.end()));
    for (int j : ring) {
      const auto back = m.neighbors(static_cast<std::size_t>(j));
      EXPECT_TRUE(std::binary_search(back.begin(), back.end(), static_cast<int>(i)));
    }
  }
  EXPECT_EQ(total, 2 * m.num_edges());
}

TEST(SurfaceMesh, VertexAreasPartitionSurface) {
  const SurfaceMesh m = icosphere(3);
  double sum = 0.0;
  for (double a : vertex_areas(m)) sum += a;
  EXPECT_NEAR(sum, surface_area(m), 1e-12);
}

TEST(SurfaceMesh, ScalingAndTranslation) {
  const SurfaceMesh m = icosphere(2);
  const SurfaceMesh big = m.scaled(2.0);
  EXPECT_NEAR(surface_area(big), 4.0 * surface_area(m), 1e-12);
  EXPECT_NEAR(enclosed_volume(big), 8.0 * enclosed_volume(m), 1e-12);
  const SurfaceMesh moved = m.translated(Vec3(3.0, -1.0, 2.0));
  EXPECT_NEAR(enclosed_volume(moved), enclosed_volume(m), 1e-12);
  EXPECT_NEAR(surface_area(moved), surface_area(m), 1e-12);
}

TEST(SurfaceMesh, TriangleArea) {
  EXPECT_DOUBLE_EQ(triangle_area(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)), 0.5);
  EXPECT_DOUBLE_EQ(triangle_area(Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 0, 3)), 3.0);
}

TEST(OffFormat, RoundTrip) {
  const SurfaceMesh m = icosphere(1);
  const SurfaceMesh back = parse_off(to_off(m));
  ASSERT_EQ(back.num_vertices(), m.num_vertices());
  ASSERT_EQ(back.num_triangles(), m.num_triangles());
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    EXPECT_EQ(back.vertex(i), m.vertex(i));
  }
  EXPECT_EQ(back.triangles(), m.triangles());

  const auto path = std::filesystem::temp_directory_path() / "tmsim_roundtrip.off";
  write_off(m, path);
  EXPECT_EQ(load_off(path).num_triangles(), m.num_triangles());
  std::filesystem::remove(path);
}

TEST(OffFormat, TetrahedronGeometry) {
  const SurfaceMesh m = parse_off(kTetra);
  // Edge length 2 sqrt 2; the regular tetrahedron has volume a^3 / (6 sqrt 2).
  const double a = 2.0 * std::sqrt(2.0);
  EXPECT_NEAR(enclosed_volume(m), a * a * a / (6.0 * std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(surface_area(m), std::sqrt(3.0) * a * a, 1e-12);
}

TEST(OffFormat, StructuralErrors) {
  EXPECT_EQ(parse_kind("OFF\n4 4\n"), MeshError::Kind::parse);
  EXPECT_EQ(parse_kind("COFF\n"), MeshError::Kind::parse);
  EXPECT_EQ(parse_kind("OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
                       "3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 9\n"),
            MeshError::Kind::invalid_index);
  EXPECT_EQ(parse_kind("OFF\n4 3 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
                       "3 0 1 2\n3 0 3 1\n3 0 2 3\n"),
            MeshError::Kind::not_closed);
  EXPECT_EQ(parse_kind("OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
                       "3 0 2 1\n3 0 3 1\n3 0 2 3\n3 1 3 2\n"),
            MeshError::Kind::inconsistent_orientation);
  EXPECT_EQ(parse_kind("OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
                       "3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n"),
            MeshError::Kind::inverted);
  EXPECT_EQ(parse_kind("OFF\n4 4 6\n0 0 0\n1 0 0\n2 0 0\n0 0 1\n"
                       "3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n"),
            MeshError::Kind::degenerate);
}

TEST(OffFormat, NonManifoldEdge) {
  // Two tetrahedra glued along the edge (0, 1) only.
  const char* text =
      "OFF\n6 8 0\n"
      "1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
      "3 3 -3\n-3 -3 3\n"
      "3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n"
      "3 0 1 4\n3 0 5 1\n3 0 4 5\n3 1 5 4\n";
  EXPECT_EQ(parse_kind(text), MeshError::Kind::non_manifold);
}

TEST(OffFormat, MissingFile) {
  try {
    load_off("/nonexistent/definitely_missing.off");
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_EQ(e.kind(), MeshError::Kind::io);
  }
}
