#include "voxsr/synthdata/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "voxsr/common/error.hpp"
#include "voxsr/common/rng.hpp"
#include "voxsr/geometry/io.hpp"
#include "voxsr/geometry/serialize.hpp"

namespace voxsr::synthdata {

void SceneSpec::check_valid() const {
  for (int a = 0; a < 3; ++a) {
    if (!(region_min[a] < region_max[a])) fail_arg("scene spec: empty region on axis ", a);
  }
  if (!(radar_keep_frac > 0.0 && radar_keep_frac <= 1.0)) {
    fail_arg("scene spec: radar_keep_frac must lie in (0,1], got ", radar_keep_frac);
  }
  if (radar_jitter_sigma < 0) fail_arg("scene spec: radar_jitter_sigma must be >= 0");
  if (!(density > 0)) fail_arg("scene spec: density must be > 0");
  if (walls < 0 || boxes < 0 || poles < 0 || clutter_points < 0) {
    fail_arg("scene spec: primitive counts must be >= 0");
  }
}

namespace {

// A parametric surface patch: rectangles (planes, box faces) and cylinder
// shells, sampled uniformly by area.
struct Surface {
  enum class Kind { Rect, Cylinder } kind = Kind::Rect;
  Vec3 origin;         // rect corner, or cylinder base center
  Vec3 u, v;           // rect edges; for cylinders v.z() is the height
  double radius = 0.0; // cylinders only
  double area() const {
    return kind == Kind::Rect ? u.norm() * v.norm() : 2.0 * M_PI * radius * v.z();
  }
  Vec3 sample(Rng& rng) const {
    if (kind == Kind::Rect) return origin + rng.uniform() * u + rng.uniform() * v;
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    return origin + Vec3(radius * std::cos(theta), radius * std::sin(theta),
                         rng.uniform(0.0, v.z()));
  }
};

std::vector<Surface> build_surfaces(const SceneSpec& spec) {
  Rng rng(spec.seed, "primitives");
  const Vec3 span = spec.region_max - spec.region_min;
  const double zmin = spec.region_min.z();
  const double height = span.z();
  std::vector<Surface> surfaces;

  for (int i = 0; i < spec.walls; ++i) {
    Surface s;
    const bool along_x = rng.uniform() < 0.5;
    const double len = rng.uniform(0.4, 0.85) * (along_x ? span.x() : span.y());
    const double u_lo = along_x ? spec.region_min.x() : spec.region_min.y();
    const double u_hi = (along_x ? spec.region_max.x() : spec.region_max.y()) - len;
    const double u0 = rng.uniform(u_lo, u_hi);
    const double cross = along_x ? rng.uniform(spec.region_min.y(), spec.region_max.y())
                                 : rng.uniform(spec.region_min.x(), spec.region_max.x());
    s.origin = along_x ? Vec3(u0, cross, zmin) : Vec3(cross, u0, zmin);
    s.u = along_x ? Vec3(len, 0, 0) : Vec3(0, len, 0);
    s.v = Vec3(0, 0, height);
    surfaces.push_back(s);
  }

  for (int i = 0; i < spec.boxes; ++i) {
    const double hx = rng.uniform(0.15, 0.4) * span.x() / 4;
    const double hy = rng.uniform(0.15, 0.4) * span.y() / 4;
    const double bh = rng.uniform(0.3, 0.9) * height;
    const double cx = rng.uniform(spec.region_min.x() + hx, spec.region_max.x() - hx);
    const double cy = rng.uniform(spec.region_min.y() + hy, spec.region_max.y() - hy);
    const Vec3 lo(cx - hx, cy - hy, zmin);
    // four side faces
    surfaces.push_back({Surface::Kind::Rect, lo, Vec3(2 * hx, 0, 0), Vec3(0, 0, bh)});
    surfaces.push_back({Surface::Kind::Rect, Vec3(lo.x(), cy + hy, zmin), Vec3(2 * hx, 0, 0),
                        Vec3(0, 0, bh)});
    surfaces.push_back({Surface::Kind::Rect, lo, Vec3(0, 2 * hy, 0), Vec3(0, 0, bh)});
    surfaces.push_back({Surface::Kind::Rect, Vec3(cx + hx, lo.y(), zmin), Vec3(0, 2 * hy, 0),
                        Vec3(0, 0, bh)});
    // top
    surfaces.push_back({Surface::Kind::Rect, Vec3(lo.x(), lo.y(), zmin + bh),
                        Vec3(2 * hx, 0, 0), Vec3(0, 2 * hy, 0)});
  }

  for (int i = 0; i < spec.poles; ++i) {
    Surface s;
    s.kind = Surface::Kind::Cylinder;
    s.radius = rng.uniform(0.04, 0.12) * std::min(span.x(), span.y()) / 4;
    const double cx =
        rng.uniform(spec.region_min.x() + s.radius, spec.region_max.x() - s.radius);
    const double cy =
        rng.uniform(spec.region_min.y() + s.radius, spec.region_max.y() - s.radius);
    s.origin = Vec3(cx, cy, zmin);
    s.v = Vec3(0, 0, height);
    surfaces.push_back(s);
  }
  return surfaces;
}

PointCloud sample_lidar(const std::vector<Surface>& surfaces, const SceneSpec& spec,
                        std::uint64_t frame) {
  Rng rng(spec.seed, 0x11dull * 1000003ull + frame);
  PointCloud cloud;
  for (const auto& s : surfaces) {
    const auto count = static_cast<std::size_t>(std::llround(s.area() * spec.density));
    for (std::size_t i = 0; i < count; ++i) cloud.points.push_back(s.sample(rng));
  }
  return cloud;
}

PointCloud derive_radar(const PointCloud& lidar, const SceneSpec& spec, std::uint64_t frame) {
  Rng select_rng(spec.seed, 0x2adull * 1000003ull + frame);
  Rng jitter_rng(spec.seed, 0x317ull * 1000003ull + frame);
  Rng clutter_rng(spec.seed, 0x404ull * 1000003ull + frame);

  const auto keep = static_cast<std::size_t>(
      std::llround(spec.radar_keep_frac * static_cast<double>(lidar.size())));
  auto indices = select_rng.sample_indices(lidar.size(), keep);
  std::sort(indices.begin(), indices.end());

  PointCloud radar;
  radar.points.reserve(indices.size() + static_cast<std::size_t>(spec.clutter_points));
  for (auto i : indices) {
    Vec3 p = lidar.points[i];
    if (spec.radar_jitter_sigma > 0) {
      for (int a = 0; a < 3; ++a) {
        p[a] = std::clamp(p[a] + jitter_rng.normal(0.0, spec.radar_jitter_sigma),
                          spec.region_min[a], spec.region_max[a]);
      }
    }
    radar.points.push_back(p);
  }
  for (int i = 0; i < spec.clutter_points; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = clutter_rng.uniform(spec.region_min[a], spec.region_max[a]);
    radar.points.push_back(p);
  }
  return radar;
}

}  // namespace

SceneFrame generate_scene(const SceneSpec& spec) {
  spec.check_valid();
  const auto surfaces = build_surfaces(spec);
  SceneFrame frame;
  frame.lidar = sample_lidar(surfaces, spec, 0);
  frame.radar = derive_radar(frame.lidar, spec, 0);
  frame.pose = RigidTransform::identity();
  return frame;
}

std::vector<SceneFrame> generate_sequence(const SceneSpec& spec, int n_frames,
                                          const RigidTransform& step_motion) {
  spec.check_valid();
  if (n_frames < 1) fail_arg("generate_sequence: n_frames must be >= 1");
  step_motion.check_valid(1e-9);
  const auto surfaces = build_surfaces(spec);

  std::vector<SceneFrame> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  RigidTransform pose = RigidTransform::identity();
  for (int k = 0; k < n_frames; ++k) {
    SceneFrame frame;
    frame.pose = pose;
    PointCloud world_lidar = sample_lidar(surfaces, spec, static_cast<std::uint64_t>(k));
    PointCloud world_radar = derive_radar(world_lidar, spec, static_cast<std::uint64_t>(k));
    const RigidTransform into_sensor = pose.inverse();
    frame.lidar = geometry::apply_transform(world_lidar, into_sensor);
    frame.radar = geometry::apply_transform(world_radar, into_sensor);
    frames.push_back(std::move(frame));
    pose = step_motion * pose;
  }
  return frames;
}

void to_json(nlohmann::json& j, const SceneSpec& spec) {
  j["seed"] = spec.seed;
  j["region_min"] = {spec.region_min.x(), spec.region_min.y(), spec.region_min.z()};
  j["region_max"] = {spec.region_max.x(), spec.region_max.y(), spec.region_max.z()};
  j["walls"] = spec.walls;
  j["boxes"] = spec.boxes;
  j["poles"] = spec.poles;
  j["density"] = spec.density;
  j["radar_keep_frac"] = spec.radar_keep_frac;
  j["radar_jitter_sigma"] = spec.radar_jitter_sigma;
  j["clutter_points"] = spec.clutter_points;
}

void from_json(const nlohmann::json& j, SceneSpec& spec) {
  spec.seed = j.at("seed");
  const auto lo = j.at("region_min").get<std::array<double, 3>>();
  const auto hi = j.at("region_max").get<std::array<double, 3>>();
  spec.region_min = Vec3(lo[0], lo[1], lo[2]);
  spec.region_max = Vec3(hi[0], hi[1], hi[2]);
  spec.walls = j.at("walls");
  spec.boxes = j.at("boxes");
  spec.poles = j.at("poles");
  spec.density = j.at("density");
  spec.radar_keep_frac = j.at("radar_keep_frac");
  spec.radar_jitter_sigma = j.at("radar_jitter_sigma");
  spec.clutter_points = j.at("clutter_points");
}

std::string write_dataset(const std::string& dir, const std::vector<SceneFrame>& frames,
                          const SceneSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["spec"] = spec;
  auto& entries = manifest["frames"] = nlohmann::json::array();
  char name[64];
  for (std::size_t k = 0; k < frames.size(); ++k) {
    nlohmann::json entry;
    std::snprintf(name, sizeof(name), "lidar_%04zu.ply", k);
    entry["lidar"] = name;
    geometry::save_cloud(frames[k].lidar, (fs::path(dir) / name).string());
    std::snprintf(name, sizeof(name), "radar_%04zu.ply", k);
    entry["radar"] = name;
    geometry::save_cloud(frames[k].radar, (fs::path(dir) / name).string());
    entry["pose"] = frames[k].pose;
    entries.push_back(std::move(entry));
  }
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) fail("cannot open '", manifest_path, "' for writing");
  os << manifest.dump(2) << "\n";
  return manifest_path;
}

std::vector<SceneFrame> load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream is(manifest_path);
  if (!is) fail("cannot open '", manifest_path, "' for reading");
  nlohmann::json manifest;
  is >> manifest;
  const fs::path base = fs::path(manifest_path).parent_path();

  std::vector<SceneFrame> frames;
  for (const auto& entry : manifest.at("frames")) {
    SceneFrame frame;
    frame.lidar = geometry::load_cloud((base / entry.at("lidar").get<std::string>()).string());
    frame.radar = geometry::load_cloud((base / entry.at("radar").get<std::string>()).string());
    frame.pose = entry.at("pose").get<RigidTransform>();
    frames.push_back(std::move(frame));
  }
  if (frames.empty()) fail("dataset '", manifest_path, "' contains no frames");
  return frames;
}

}  // namespace voxsr::synthdata
