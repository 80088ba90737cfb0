#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mgsagc/error.hpp"
#include "mgsagc/harness.hpp"

namespace mgsagc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::array<const char*, kNumShapes> kShapeNames = {"sphere", "cube",  "cylinder", "cone",
                                                             "torus",  "plane", "pyramid",  "helix"};

Vec3 unit_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (;;) {
    const Vec3 v{nd(rng), nd(rng), nd(rng)};
    const double n = norm(v);
    if (n > 1e-12) return (1.0 / n) * v;
  }
}

Vec3 disk_point(double radius, double z, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius * std::sqrt(u(rng));
  const double phi = 2.0 * kPi * u(rng);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

TriangleMesh pyramid_mesh() {
  TriangleMesh m;
  m.vertices = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {0, 0, 1}};
  m.faces = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}, {0, 2, 1}, {0, 3, 2}};
  return m;
}

// Uniform random rotation from a unit quaternion.
std::array<double, 9> random_rotation(Rotation kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (kind == Rotation::None) return {1, 0, 0, 0, 1, 0, 0, 0, 1};
  if (kind == Rotation::Z) {
    const double a = 2.0 * kPi * u(rng);
    const double c = std::cos(a), s = std::sin(a);
    return {c, -s, 0, s, c, 0, 0, 0, 1};
  }
  const double u1 = u(rng), u2 = u(rng), u3 = u(rng);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double w = a * std::sin(2 * kPi * u2), x = a * std::cos(2 * kPi * u2);
  const double y = b * std::sin(2 * kPi * u3), z = b * std::cos(2 * kPi * u3);
  return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
          2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
          2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
}

}  // namespace

const char* shape_name(Shape s) { return kShapeNames[static_cast<std::size_t>(s)]; }

Shape shape_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kShapeNames.size(); ++i)
    if (name == kShapeNames[i]) return static_cast<Shape>(i);
  throw Error(ErrorCode::InvalidArgument, "unknown shape class '" + name + "'");
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + name + "'");
}

Rotation rotation_from_name(const std::string& name) {
  if (name == "none") return Rotation::None;
  if (name == "z") return Rotation::Z;
  if (name == "so3") return Rotation::SO3;
  throw Error(ErrorCode::InvalidArgument, "unknown rotation '" + name + "' (none|z|so3)");
}

void SyntheticDatasetSpec::validate() const {
  require(classes.size() >= 2, ErrorCode::InvalidArgument, "dataset spec: need at least 2 classes");
  require(samples_per_class >= 1, ErrorCode::InvalidArgument, "dataset spec: samples_per_class must be >= 1");
  require(num_points >= 2, ErrorCode::InvalidArgument, "dataset spec: num_points must be >= 2");
  require(noise_sigma >= 0 && std::isfinite(noise_sigma), ErrorCode::InvalidArgument,
          "dataset spec: noise_sigma must be >= 0");
}

PointCloud sample_shape(Shape shape, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  PointCloud c;
  c.positions.reserve(n);
  switch (shape) {
    case Shape::Sphere:
      for (std::size_t i = 0; i < n; ++i) c.positions.push_back(unit_normal(rng));
      break;
    case Shape::Cube: {
      std::uniform_int_distribution<int> face(0, 5);
      for (std::size_t i = 0; i < n; ++i) {
        const int f = face(rng);
        const double a = sym(rng), b = sym(rng), s = (f % 2) ? 1.0 : -1.0;
        switch (f / 2) {
          case 0: c.positions.push_back({s, a, b}); break;
          case 1: c.positions.push_back({a, s, b}); break;
          default: c.positions.push_back({a, b, s}); break;
        }
      }
      break;
    }
    case Shape::Cylinder: {
      // side area 4pi, each cap pi
      for (std::size_t i = 0; i < n; ++i) {
        const double pick = 6.0 * u(rng);
        if (pick < 4.0) {
          const double phi = 2 * kPi * u(rng);
          c.positions.push_back({std::cos(phi), std::sin(phi), sym(rng)});
        } else {
          c.positions.push_back(disk_point(1.0, pick < 5.0 ? -1.0 : 1.0, rng));
        }
      }
      break;
    }
    case Shape::Cone: {
      // apex (0,0,1), unit base disk at z=-1
      const double lateral = kPi * std::sqrt(5.0), base = kPi;
      for (std::size_t i = 0; i < n; ++i) {
        if (u(rng) * (lateral + base) < lateral) {
          const double t = std::sqrt(u(rng));
          const double phi = 2 * kPi * u(rng);
          c.positions.push_back({t * std::cos(phi), t * std::sin(phi), 1.0 - 2.0 * t});
        } else {
          c.positions.push_back(disk_point(1.0, -1.0, rng));
        }
      }
      break;
    }
    case Shape::Torus: {
      constexpr double R = 1.0, r = 0.35;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0;
        do {
          v = 2 * kPi * u(rng);
        } while (u(rng) * (R + r) > R + r * std::cos(v));
        const double phi = 2 * kPi * u(rng);
        const double rho = R + r * std::cos(v);
        c.positions.push_back({rho * std::cos(phi), rho * std::sin(phi), r * std::sin(v)});
      }
      break;
    }
    case Shape::Plane:
      for (std::size_t i = 0; i < n; ++i) c.positions.push_back({sym(rng), sym(rng), 0.0});
      break;
    case Shape::Pyramid:
      c = sample_surface(pyramid_mesh(), n, rng());
      break;
    case Shape::Helix: {
      constexpr double turns = 3.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = u(rng);
        const double a = 2 * kPi * turns * t;
        c.positions.push_back({std::cos(a), std::sin(a), -1.0 + 2.0 * t});
      }
      break;
    }
  }
  return c;
}

LabeledClouds& Dataset::split(Split s) {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    default: return test;
  }
}

const LabeledClouds& Dataset::split(Split s) const { return const_cast<Dataset*>(this)->split(s); }

SplitSizes split_sizes(int samples_per_class) {
  SplitSizes s;
  s.val = static_cast<int>(std::lround(0.1 * samples_per_class));
  s.test = static_cast<int>(std::lround(0.2 * samples_per_class));
  s.train = samples_per_class - s.val - s.test;
  return s;
}

Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  const SplitSizes sizes = split_sizes(spec.samples_per_class);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    ds.class_names.emplace_back(shape_name(spec.classes[c]));
    for (int s = 0; s < spec.samples_per_class; ++s) {
      std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)};
      std::mt19937_64 rng(seq);
      PointCloud raw = sample_shape(spec.classes[c], static_cast<std::size_t>(spec.num_points), rng);
      const auto rot = random_rotation(spec.rotation, rng);
      std::normal_distribution<double> jitter(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);
      for (auto& p : raw.positions) {
        Vec3 q{rot[0] * p.x + rot[1] * p.y + rot[2] * p.z, rot[3] * p.x + rot[4] * p.y + rot[5] * p.z,
               rot[6] * p.x + rot[7] * p.y + rot[8] * p.z};
        if (spec.noise_sigma > 0) q = q + Vec3{jitter(rng), jitter(rng), jitter(rng)};
        p = q;
      }
      PointCloud cloud = normalize_unit_sphere(raw);
      cloud.label = static_cast<int>(c);
      LabeledClouds& target = s < sizes.train ? ds.train : (s < sizes.train + sizes.val ? ds.val : ds.test);
      target.clouds.push_back(std::move(cloud));
      target.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "clouds", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create dataset directory '" + dir + "': " + ec.message());
  {
    std::ofstream classes(fs::path(dir) / "classes.txt");
    if (!classes) throw Error(ErrorCode::Io, "cannot write classes.txt in '" + dir + "'");
    for (const auto& n : ds.class_names) classes << n << '\n';
  }
  std::ofstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw Error(ErrorCode::Io, "cannot write manifest.csv in '" + dir + "'");
  manifest << "file,label,split\n";
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const auto& part = ds.split(s);
    for (std::size_t i = 0; i < part.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "clouds/%s_%05zu.xyz", split_name(s), i);
      write_xyz_file(part.clouds[i], (fs::path(dir) / name).string());
      manifest << name << ',' << part.labels[i] << ',' << split_name(s) << '\n';
    }
  }
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset ds;
  {
    std::ifstream classes(fs::path(dir) / "classes.txt");
    std::string line;
    while (std::getline(classes, line))
      if (!line.empty()) ds.class_names.push_back(line);
  }
  std::ifstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw Error(ErrorCode::Io, "cannot open manifest.csv in '" + dir + "'");
  std::string line;
  std::size_t number = 0;
  while (std::getline(manifest, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (number == 1 && line.rfind("file,", 0) == 0)) continue;
    std::stringstream ss(line);
    std::string file, label, split;
    if (!std::getline(ss, file, ',') || !std::getline(ss, label, ',') || !std::getline(ss, split))
      throw ParseError(number, "manifest row needs 'file,label,split'");
    int y = 0;
    try {
      y = std::stoi(label);
    } catch (const std::exception&) {
      throw ParseError(number, "bad label '" + label + "'");
    }
    if (y < 0) throw ParseError(number, "negative label");
    fs::path p(file);
    if (p.is_relative()) p = fs::path(dir) / p;
    PointCloud cloud = read_xyz_file(p.string());
    cloud.label = y;
    auto& part = ds.split(split_from_name(split));
    part.clouds.push_back(std::move(cloud));
    part.labels.push_back(y);
  }
  return ds;
}

}  // namespace mgsagc
