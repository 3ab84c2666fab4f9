#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::synthdata {

using geometry::PointCloud;
using geometry::RigidTransform;
using geometry::Vec3;

/// Paired-scene recipe: dense surface samples of simple primitives stand in
/// for a LiDAR sweep; the radar counterpart is a sparse jittered subsample
/// plus uniform clutter. Deterministic per seed on every platform (fixed
/// xoshiro256++ substreams per scene and frame).
struct SceneSpec {
  std::uint64_t seed = 0;
  Vec3 region_min{-2.0, -2.0, -0.5};
  Vec3 region_max{2.0, 2.0, 0.5};
  int walls = 3;
  int boxes = 2;
  int poles = 2;
  double density = 300.0;           // LiDAR samples per square meter
  double radar_keep_frac = 0.025;   // subsample fraction, in (0, 1]
  double radar_jitter_sigma = 0.03; // per-axis Gaussian jitter, meters
  int clutter_points = 24;

  void check_valid() const;
};

struct SceneFrame {
  PointCloud lidar;
  PointCloud radar;
  RigidTransform pose;  // sensor-to-world: apply_transform(cloud, pose) is world frame
};

/// One co-registered (LiDAR, radar) pair in the sensor frame with an
/// identity pose.
SceneFrame generate_scene(const SceneSpec& spec);

/// A static scene observed from n poses: pose_k = step_motion^k. Surface
/// samples are redrawn each frame so consecutive observations differ the
/// way separate sweeps would; clouds are expressed in their sensor frames.
std::vector<SceneFrame> generate_sequence(const SceneSpec& spec, int n_frames,
                                          const RigidTransform& step_motion);

/// Writes PLY pairs plus manifest.json (paths, poses, spec echo) into dir.
std::string write_dataset(const std::string& dir, const std::vector<SceneFrame>& frames,
                          const SceneSpec& spec);

/// Loads a dataset directory written by write_dataset.
std::vector<SceneFrame> load_dataset(const std::string& manifest_path);

void to_json(nlohmann::json& j, const SceneSpec& spec);
void from_json(const nlohmann::json& j, SceneSpec& spec);

}  // namespace voxsr::synthdata
