#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgsagc {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3 a, Vec3 b) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

struct PointCloud {
  std::vector<Vec3> positions;
  std::optional<int> label;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

/// ASCII OFF. The header keyword may share a line with the counts
/// ("OFF 3 1 0"). Polygons with more than three vertices are fan-triangulated.
TriangleMesh parse_off(std::string_view text);
std::string serialize_off(const TriangleMesh& mesh);

/// One "x y z" point per non-empty line.
PointCloud parse_xyz(std::string_view text);
std::string serialize_xyz(const PointCloud& cloud);

PointCloud read_xyz_file(const std::string& path);
TriangleMesh read_off_file(const std::string& path);
void write_xyz_file(const PointCloud& cloud, const std::string& path);

double triangle_area(Vec3 a, Vec3 b, Vec3 c);

/// Area-weighted triangle choice followed by uniform barycentric sampling.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Uniform subsample without replacement when n <= N, otherwise with replacement.
PointCloud sample_points(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

/// Centers on the centroid and scales so the farthest point has norm 1.
/// A cloud whose points all coincide maps to all zeros.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

void check_finite(const PointCloud& cloud);

}  // namespace mgsagc
