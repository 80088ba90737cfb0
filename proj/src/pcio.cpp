#include "mgsagc/pcio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mgsagc/error.hpp"

namespace mgsagc {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string_view> tokens;
};

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Non-empty lines with '#' comments stripped.
std::vector<Line> content_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    std::string_view raw = text.substr(pos, end - pos);
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    auto tokens = split_ws(raw);
    if (!tokens.empty()) lines.push_back({number, std::move(tokens)});
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError(line, "non-numeric token '" + std::string(tok) + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

std::uint64_t parse_count(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "expected a non-negative integer, got '" + std::string(tok) + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TriangleMesh parse_off(std::string_view text) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw ParseError(0, "malformed header: empty file");

  std::size_t cursor = 0;
  const Line& header = lines[cursor++];
  if (header.tokens[0] != "OFF")
    throw ParseError(header.number, "malformed header: expected 'OFF', got '" + std::string(header.tokens[0]) + "'");

  std::vector<std::string_view> counts(header.tokens.begin() + 1, header.tokens.end());
  std::size_t counts_line = header.number;
  if (counts.empty()) {
    if (cursor >= lines.size()) throw ParseError(header.number, "malformed header: missing counts line");
    counts = lines[cursor].tokens;
    counts_line = lines[cursor].number;
    ++cursor;
  }
  if (counts.size() < 2 || counts.size() > 3)
    throw ParseError(counts_line, "malformed header: counts line needs 'vertices faces [edges]'");
  const auto nv = parse_count(counts[0], counts_line);
  const auto nf = parse_count(counts[1], counts_line);
  if (counts.size() == 3) parse_count(counts[2], counts_line);

  TriangleMesh mesh;
  mesh.vertices.reserve(nv);
  for (std::uint64_t v = 0; v < nv; ++v) {
    if (cursor >= lines.size())
      throw ParseError(lines.back().number, "count mismatch: declared " + std::to_string(nv) +
                                                " vertices, found " + std::to_string(v));
    const Line& l = lines[cursor++];
    if (l.tokens.size() < 3) throw ParseError(l.number, "vertex line needs 3 coordinates");
    mesh.vertices.push_back({parse_double(l.tokens[0], l.number), parse_double(l.tokens[1], l.number),
                             parse_double(l.tokens[2], l.number)});
  }
  for (std::uint64_t f = 0; f < nf; ++f) {
    if (cursor >= lines.size())
      throw ParseError(lines.back().number, "count mismatch: declared " + std::to_string(nf) +
                                                " faces, found " + std::to_string(f));
    const Line& l = lines[cursor++];
    const auto k = parse_count(l.tokens[0], l.number);
    if (k < 3) throw ParseError(l.number, "face needs at least 3 vertices");
    if (l.tokens.size() < k + 1) throw ParseError(l.number, "face declares " + std::to_string(k) + " vertices");
    std::vector<std::uint32_t> idx(k);
    for (std::uint64_t i = 0; i < k; ++i) {
      const auto v = parse_count(l.tokens[i + 1], l.number);
      if (v >= nv) throw ParseError(l.number, "face index " + std::to_string(v) + " out of range");
      idx[i] = static_cast<std::uint32_t>(v);
    }
    for (std::uint64_t i = 1; i + 1 < k; ++i) mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
  }
  if (cursor != lines.size())
    throw ParseError(lines[cursor].number, "count mismatch: trailing content after declared faces");
  return mesh;
}

std::string serialize_off(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
  for (const auto& v : mesh.vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  return out.str();
}

PointCloud parse_xyz(std::string_view text) {
  PointCloud cloud;
  for (const auto& l : content_lines(text)) {
    if (l.tokens.size() < 3) throw ParseError(l.number, "expected 'x y z'");
    cloud.positions.push_back({parse_double(l.tokens[0], l.number), parse_double(l.tokens[1], l.number),
                               parse_double(l.tokens[2], l.number)});
  }
  if (cloud.empty()) throw ParseError(0, "no points");
  return cloud;
}

std::string serialize_xyz(const PointCloud& cloud) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& p : cloud.positions) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  return out.str();
}

PointCloud read_xyz_file(const std::string& path) { return parse_xyz(read_file(path)); }
TriangleMesh read_off_file(const std::string& path) { return parse_off(read_file(path)); }

void write_xyz_file(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << serialize_xyz(cloud);
}

double triangle_area(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * norm(cross(b - a, c - a)); }

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample_surface: n must be >= 1");
  std::vector<double> areas;
  areas.reserve(mesh.faces.size());
  double total = 0;
  for (const auto& f : mesh.faces) {
    for (auto i : f)
      require(i < mesh.vertices.size(), ErrorCode::InvalidArgument, "sample_surface: face index out of range");
    areas.push_back(triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]));
    total += areas.back();
  }
  require(total > 0, ErrorCode::Domain, "sample_surface: mesh has zero total surface area");

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud cloud;
  cloud.positions.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto& f = mesh.faces[pick(rng)];
    double u = unit(rng), v = unit(rng);
    if (u + v > 1) {
      u = 1 - u;
      v = 1 - v;
    }
    const Vec3 a = mesh.vertices[f[0]], b = mesh.vertices[f[1]], c = mesh.vertices[f[2]];
    cloud.positions.push_back(a + u * (b - a) + v * (c - a));
  }
  return cloud;
}

PointCloud sample_points(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  require(!cloud.empty(), ErrorCode::InvalidArgument, "sample_points: empty cloud");
  std::mt19937_64 rng(seed);
  PointCloud out;
  out.label = cloud.label;
  out.positions.reserve(n);
  const std::size_t N = cloud.size();
  if (n <= N) {
    // Partial Fisher-Yates: the first n slots are a uniform draw without replacement.
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, N - 1);
      std::swap(idx[i], idx[d(rng)]);
      out.positions.push_back(cloud.positions[idx[i]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> d(0, N - 1);
    for (std::size_t i = 0; i < n; ++i) out.positions.push_back(cloud.positions[d(rng)]);
  }
  return out;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  require(!cloud.empty(), ErrorCode::InvalidArgument, "normalize_unit_sphere: empty cloud");
  const double n = static_cast<double>(cloud.size());
  Vec3 c;
  for (const auto& p : cloud.positions) c = c + p;
  c = (1.0 / n) * c;
  double max_norm = 0;
  for (const auto& p : cloud.positions) max_norm = std::max(max_norm, norm(p - c));
  PointCloud out;
  out.label = cloud.label;
  out.positions.resize(cloud.size());
  if (max_norm == 0) return out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud.positions[i] - c;
    out.positions[i] = {d.x / max_norm, d.y / max_norm, d.z / max_norm};
  }
  return out;
}

void check_finite(const PointCloud& cloud) {
  for (const auto& p : cloud.positions)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw Error(ErrorCode::NonFinite, "point cloud contains non-finite coordinates");
}

}  // namespace mgsagc
