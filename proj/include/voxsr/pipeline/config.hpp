#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "voxsr/diffusion/diffusion.hpp"
#include "voxsr/geometry/preprocess.hpp"
#include "voxsr/metrics/metrics.hpp"
#include "voxsr/nets/decoder.hpp"
#include "voxsr/nets/denoiser.hpp"
#include "voxsr/nets/encoder.hpp"
#include "voxsr/registration/icp.hpp"
#include "voxsr/registration/eval.hpp"
#include "voxsr/synthdata/scene.hpp"
#include "voxsr/train/trainer.hpp"

namespace voxsr::pipeline {

/// Flat key-value run configuration. Loaded from a "key = value" text file
/// (see configs/SCHEMA.cfg for every key), then overridden by
/// VOXSR_<KEY_WITH_DOTS_AS_UNDERSCORES> environment variables. Unknown keys
/// are rejected; every command echoes the fully resolved config into its
/// output directory.
struct RunConfig {
  // grid.*
  voxel::VoxelGridSpec grid{geometry::Vec3(-2.0, -2.0, -0.5),
                            {32, 32, 8},
                            geometry::Vec3(0.125, 0.125, 0.125)};

  // net.*
  int enc_width = 64;
  int enc_stats = 4;
  int enc_groups = 8;
  int latent_channels = 64;
  std::array<int, 3> denoiser_widths = {64, 128, 256};
  int denoiser_blocks = 2;
  int time_dim = 128;
  int denoiser_groups = 8;
  std::array<int, 3> decoder_widths = {32, 16, 8};
  int decoder_groups = 4;

  // diff.*
  int timesteps = 1024;
  diffusion::ScheduleKind schedule = diffusion::ScheduleKind::Cosine;
  diffusion::PredTarget target = diffusion::PredTarget::Noise;
  diffusion::LossKind loss_kind = diffusion::LossKind::L2;
  int sample_steps = 128;
  bool clip_x0 = true;  // generation-path stabilization; oracle tests run with it off

  // train.*
  int stage1_iters = 2500;
  double stage1_lr = 1e-3;
  int stage2_iters = 6000;
  double stage2_lr = 1e-4;
  double weight_decay = 0.0;
  int log_every = 25;
  double stop_iou = 0.0;
  double stop_cd = 0.0;
  double lambda_mask = 0.9;
  double lambda_offset = 0.1;

  // synth.*
  synthdata::SceneSpec scene;
  int synth_scenes = 8;
  int synth_frames = 1;
  std::array<double, 4> synth_motion = {2.0, 0.0, 0.0, 5.0};  // dx dy dz yaw_deg per frame

  // preprocess.*
  double ground_thresh = 0.05;
  int ground_iters = 128;
  geometry::FovSpec fov;

  // metrics.*
  double fscore_tau = 0.1;
  double bev_cell = 0.5;
  bool metrics_2d = false;

  // reg.*
  registration::IcpOptions icp;
  registration::RegThresholds reg_thresholds;
  double reg_pair_min_dist = 1.5;

  // run.*
  std::uint64_t seed = 0;
  double threshold = 0.5;  // reconstruction mask threshold

  // Derived builders.
  nets::EncoderConfig encoder_config() const;
  nets::DenoiserConfig denoiser_config() const;
  nets::DecoderConfig decoder_config() const;
  train::TrainConfig stage1_train_config() const;
  train::TrainConfig stage2_train_config() const;
  train::LossWeights loss_weights() const;
  metrics::MetricConfig metric_config() const;
  synthdata::SceneSpec scene_spec(std::uint64_t scene_seed) const;
  geometry::RigidTransform motion_step() const;
};

/// Defaults -> optional file -> environment overrides. An empty path loads
/// defaults (plus environment).
RunConfig load_run_config(const std::string& path);

/// Writes the fully resolved "key = value" listing, sorted by key.
void echo_config(const RunConfig& cfg, const std::string& path);

/// The resolved listing as text (one "key = value" per line).
std::string config_to_text(const RunConfig& cfg);

}  // namespace voxsr::pipeline
