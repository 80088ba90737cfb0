#include "mgsagc/msgraph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binio.hpp"
#include "mgsagc/error.hpp"

namespace mgsagc {

namespace detail {

std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_binary_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace detail

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxCellsPerAxis = 64;

// Uniform grid over the bounding box with cubic cells; per-cell point lists
// are stored CSR-style in increasing vertex order.
class UniformGrid {
 public:
  UniformGrid(const std::vector<Vec3>& pts, double cell) : pts_(pts) {
    lo_ = hi_ = pts.front();
    for (const auto& p : pts) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y), std::min(lo_.z, p.z)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y), std::max(hi_.z, p.z)};
    }
    const double extent = std::max({hi_.x - lo_.x, hi_.y - lo_.y, hi_.z - lo_.z});
    cell_ = std::max(cell, extent / kMaxCellsPerAxis);
    if (!(cell_ > 0)) cell_ = 1.0;
    dims_ = {axis_dim(hi_.x - lo_.x), axis_dim(hi_.y - lo_.y), axis_dim(hi_.z - lo_.z)};

    const std::size_t ncells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    start_.assign(ncells + 1, 0);
    cell_of_.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of_[i] = coords(pts[i]);
      ++start_[flat(cell_of_[i]) + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[flat(cell_of_[i])]++] = static_cast<std::uint32_t>(i);
  }

  double cell() const { return cell_; }
  const std::array<int, 3>& dims() const { return dims_; }
  const std::array<int, 3>& cell_of(std::size_t i) const { return cell_of_[i]; }

  template <class F>
  void for_each_in_cell(int cx, int cy, int cz, F&& f) const {
    if (cx < 0 || cy < 0 || cz < 0 || cx >= dims_[0] || cy >= dims_[1] || cz >= dims_[2]) return;
    const std::size_t c = flat({cx, cy, cz});
    for (std::size_t s = start_[c]; s < start_[c + 1]; ++s) f(items_[s]);
  }

 private:
  int axis_dim(double extent) const {
    return std::min(kMaxCellsPerAxis, static_cast<int>(std::floor(extent / cell_))) + 1;
  }
  int axis_coord(double v, double lo, int dim) const {
    return std::clamp(static_cast<int>(std::floor((v - lo) / cell_)), 0, dim - 1);
  }
  std::array<int, 3> coords(Vec3 p) const {
    return {axis_coord(p.x, lo_.x, dims_[0]), axis_coord(p.y, lo_.y, dims_[1]), axis_coord(p.z, lo_.z, dims_[2])};
  }
  std::size_t flat(const std::array<int, 3>& c) const {
    return (static_cast<std::size_t>(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0];
  }

  const std::vector<Vec3>& pts_;
  Vec3 lo_, hi_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> items_;
  std::vector<std::array<int, 3>> cell_of_;
};

bool all_coincident(const PointCloud& cloud) {
  const Vec3 p0 = cloud.positions.front();
  return std::all_of(cloud.positions.begin(), cloud.positions.end(), [&](Vec3 p) { return p == p0; });
}

// Summation in sorted order keeps the result independent of point order.
double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += x;
  return s;
}

double nearest_neighbor_spacing(const PointCloud& cloud) {
  const auto& pts = cloud.positions;
  const std::size_t n = pts.size();
  // Roughly one point per cell for volumetric clouds.
  Vec3 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  const UniformGrid grid(pts, extent / std::max(1.0, std::cbrt(static_cast<double>(n))));
  const int max_ring = std::max({grid.dims()[0], grid.dims()[1], grid.dims()[2]});

  std::vector<double> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [cx, cy, cz] = grid.cell_of(i);
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_ring; ++r) {
      for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            grid.for_each_in_cell(cx + dx, cy + dy, cz + dz, [&](std::uint32_t j) {
              if (j != i) best = std::min(best, euclidean_distance(pts[i], pts[j]));
            });
          }
      // Anything outside rings 0..r is at least r cells away.
      if (best <= r * grid.cell()) break;
    }
    nn[i] = best;
  }
  return sorted_sum(std::move(nn)) / static_cast<double>(n);
}

}  // namespace

double euclidean_distance(Vec3 p, Vec3 q) {
  const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double azimuth(Vec3 p, Vec3 q) {
  const double dx = q.x - p.x, dy = q.y - p.y;
  if (dx == 0 && dy == 0) return 0.0;
  double t = std::atan2(dx, dy);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

OctreeCellSize octree_cell_size(const PointCloud& cloud) {
  require(!cloud.empty(), ErrorCode::InvalidArgument, "octree_cell_size: empty cloud");
  Vec3 lo = cloud.positions.front(), hi = lo;
  for (const auto& p : cloud.positions) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const double n = static_cast<double>(cloud.size());
  OctreeCellSize s;
  s.x = (hi.x - lo.x) / n;
  s.y = (hi.y - lo.y) / n;
  s.z = (hi.z - lo.z) / n;
  s.combined = std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
  return s;
}

double mean_point_spacing(const PointCloud& cloud, SpacingMode mode) {
  require(cloud.size() >= 2, ErrorCode::InvalidArgument, "mean_point_spacing: need at least 2 points");
  require(!all_coincident(cloud), ErrorCode::Domain, "mean_point_spacing: degenerate cloud (all points coincide)");
  if (mode == SpacingMode::NearestNeighbor) return nearest_neighbor_spacing(cloud);

  const double ocx = octree_cell_size(cloud).combined;
  require(ocx > 0, ErrorCode::Domain, "mean_point_spacing: zero octree cell size");
  std::vector<double> terms;
  terms.reserve(cloud.size());
  for (const auto& p : cloud.positions) {
    const double x = p.x / ocx, y = p.y / ocx, z = p.z / ocx;
    terms.push_back(std::sqrt(x * x + y * y + z * z));
  }
  return sorted_sum(std::move(terms));
}

double scale_radius(int k, double d_m) {
  require(k >= 1, ErrorCode::InvalidArgument, "scale_radius: k must be >= 1");
  require(d_m > 0, ErrorCode::InvalidArgument, "scale_radius: d_m must be positive");
  return std::ldexp(d_m, k);
}

ScaleGraph build_scale_graph(const PointCloud& cloud, double radius, int k, const GraphOptions& opts) {
  require(radius > 0 && std::isfinite(radius), ErrorCode::InvalidArgument, "build_scale_graph: radius must be positive");
  require(!cloud.empty(), ErrorCode::InvalidArgument, "build_scale_graph: empty cloud");
  if (opts.max_degree) require(*opts.max_degree >= 1, ErrorCode::InvalidArgument, "build_scale_graph: max_degree must be >= 1");
  const auto& pts = cloud.positions;
  const std::size_t n = pts.size();
  const UniformGrid grid(pts, radius);

  ScaleGraph g;
  g.radius = radius;
  g.k = k;
  g.offsets.reserve(n + 1);
  g.offsets.push_back(0);
  std::vector<std::uint32_t> nbrs;
  for (std::size_t i = 0; i < n; ++i) {
    nbrs.clear();
    const auto [cx, cy, cz] = grid.cell_of(i);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          grid.for_each_in_cell(cx + dx, cy + dy, cz + dz, [&](std::uint32_t j) {
            if (euclidean_distance(pts[i], pts[j]) <= radius) nbrs.push_back(j);
          });
    if (opts.max_degree && nbrs.size() > *opts.max_degree) {
      std::sort(nbrs.begin(), nbrs.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double da = euclidean_distance(pts[i], pts[a]), db = euclidean_distance(pts[i], pts[b]);
        return da != db ? da < db : a < b;
      });
      nbrs.resize(*opts.max_degree);
    }
    std::sort(nbrs.begin(), nbrs.end());
    for (auto j : nbrs) {
      g.neighbors.push_back(j);
      g.dist.push_back(euclidean_distance(pts[i], pts[j]));
      g.theta.push_back(azimuth(pts[i], pts[j]));
    }
    g.offsets.push_back(g.neighbors.size());
  }
  return g;
}

MultiScaleGraph build_multiscale_graph(const PointCloud& cloud, int k_max, SpacingMode mode,
                                       const GraphOptions& opts) {
  require(k_max >= 1, ErrorCode::InvalidArgument, "build_multiscale_graph: k_max must be >= 1");
  check_finite(cloud);
  MultiScaleGraph g;
  g.d_m = mean_point_spacing(cloud, mode);
  for (int k = 1; k <= k_max; ++k) g.scales.push_back(build_scale_graph(cloud, scale_radius(k, g.d_m), k, opts));
  return g;
}

namespace {
constexpr char kGraphMagic[5] = "MGSG";
constexpr std::uint32_t kGraphVersion = 1;
}  // namespace

std::string serialize_graph(const MultiScaleGraph& g) {
  detail::ByteWriter w;
  w.put_magic(kGraphMagic);
  w.put(kGraphVersion);
  w.put<std::uint64_t>(g.num_vertices());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.scales.size()));
  w.put(g.d_m);
  for (const auto& s : g.scales) {
    w.put<std::int32_t>(s.k);
    w.put(s.radius);
    w.put<std::uint64_t>(s.num_edges());
    w.put_array(s.offsets.data(), s.offsets.size());
    w.put_array(s.neighbors.data(), s.neighbors.size());
    w.put_array(s.dist.data(), s.dist.size());
    w.put_array(s.theta.data(), s.theta.size());
  }
  return w.take();
}

MultiScaleGraph deserialize_graph(const std::string& bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kGraphMagic, "multiscale graph file");
  const auto version = r.get<std::uint32_t>();
  if (version != kGraphVersion)
    throw Error(ErrorCode::Corrupt, "unsupported graph file version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>();
  const auto nscales = r.get<std::uint32_t>();
  MultiScaleGraph g;
  g.d_m = r.get<double>();
  for (std::uint32_t s = 0; s < nscales; ++s) {
    ScaleGraph sg;
    sg.k = r.get<std::int32_t>();
    sg.radius = r.get<double>();
    const auto e = r.get<std::uint64_t>();
    if (n + 1 > r.remaining() / sizeof(std::uint64_t) || e > r.remaining())
      throw Error(ErrorCode::Corrupt, "corrupt file: truncated");
    sg.offsets.resize(n + 1);
    r.get_array(sg.offsets.data(), n + 1);
    sg.neighbors.resize(e);
    r.get_array(sg.neighbors.data(), e);
    sg.dist.resize(e);
    r.get_array(sg.dist.data(), e);
    sg.theta.resize(e);
    r.get_array(sg.theta.data(), e);
    if (sg.offsets.front() != 0 || sg.offsets.back() != e || !std::is_sorted(sg.offsets.begin(), sg.offsets.end()))
      throw Error(ErrorCode::Corrupt, "corrupt file: bad adjacency offsets");
    for (auto j : sg.neighbors)
      if (j >= n) throw Error(ErrorCode::Corrupt, "corrupt file: neighbor index out of range");
    g.scales.push_back(std::move(sg));
  }
  if (!r.at_end()) throw Error(ErrorCode::Corrupt, "corrupt file: trailing bytes");
  return g;
}

void save_graph(const MultiScaleGraph& g, const std::string& path) {
  detail::write_binary_file(path, serialize_graph(g));
}

MultiScaleGraph load_graph(const std::string& path) { return deserialize_graph(detail::read_binary_file(path)); }

}  // namespace mgsagc
