#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mgsagc/pcio.hpp"

namespace mgsagc {

struct EdgeAttr {
  double d = 0;      // Euclidean distance
  double theta = 0;  // azimuth in [0, 2*pi)
};

/// Radius graph over one cloud in CSR form. Neighbors of vertex i are
/// neighbors[offsets[i] .. offsets[i+1]), sorted by vertex index, and always
/// include i itself with attribute (0, 0).
struct ScaleGraph {
  double radius = 0;
  int k = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> neighbors;
  std::vector<double> dist;
  std::vector<double> theta;

  std::size_t num_vertices() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t num_edges() const { return neighbors.size(); }
  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

enum class SpacingMode { NearestNeighbor, PaperEq3 };

struct MultiScaleGraph {
  std::vector<ScaleGraph> scales;  // k = 1 .. k_max
  double d_m = 0;

  std::size_t num_vertices() const { return scales.empty() ? 0 : scales.front().num_vertices(); }
};

struct GraphOptions {
  /// Keep at most this many nearest neighbors per vertex (self included).
  /// Unset means no cap.
  std::optional<std::size_t> max_degree;
};

double euclidean_distance(Vec3 p, Vec3 q);

/// Clockwise angle from +y ("north") at p to the direction p->q, measured in
/// the horizontal plane. Pairs with no horizontal offset get 0.
double azimuth(Vec3 p, Vec3 q);

struct OctreeCellSize {
  double x = 0, y = 0, z = 0;
  double combined = 0;
};

/// Per-axis extent divided by point count, and their Euclidean combination.
OctreeCellSize octree_cell_size(const PointCloud& cloud);

/// Spacing baseline d_m. NearestNeighbor: mean nearest-neighbor distance via a
/// uniform grid. PaperEq3: the printed octree formula, sum_i |p_i| / ocx_dis.
double mean_point_spacing(const PointCloud& cloud, SpacingMode mode = SpacingMode::NearestNeighbor);

double scale_radius(int k, double d_m);

ScaleGraph build_scale_graph(const PointCloud& cloud, double radius, int k, const GraphOptions& opts = {});

MultiScaleGraph build_multiscale_graph(const PointCloud& cloud, int k_max,
                                       SpacingMode mode = SpacingMode::NearestNeighbor,
                                       const GraphOptions& opts = {});

/// Versioned little-endian binary container; floats are stored raw.
std::string serialize_graph(const MultiScaleGraph& g);
MultiScaleGraph deserialize_graph(const std::string& bytes);
void save_graph(const MultiScaleGraph& g, const std::string& path);
MultiScaleGraph load_graph(const std::string& path);

}  // namespace mgsagc
