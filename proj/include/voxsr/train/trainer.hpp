#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxsr/diffusion/diffusion.hpp"
#include "voxsr/nets/decoder.hpp"
#include "voxsr/nets/denoiser.hpp"
#include "voxsr/nets/encoder.hpp"
#include "voxsr/train/losses.hpp"

namespace voxsr::train {

struct TrainConfig {
  int iterations = 3000;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  int log_every = 25;

  // Stage-1 early stop, checked at the log cadence on scene 0 (0 disables).
  double stop_iou = 0.0;
  double stop_cd = 0.0;

  // Stage-2 diffusion settings.
  int timesteps = 1024;
  diffusion::ScheduleKind schedule = diffusion::ScheduleKind::Cosine;
  diffusion::PredTarget target = diffusion::PredTarget::Noise;
  diffusion::LossKind loss_kind = diffusion::LossKind::L2;

  void check() const;
};

struct Stage1Result {
  std::string checkpoint_path;
  std::string log_path;
  int iterations_run = 0;
  double final_loss = 0.0;
  double final_iou = 0.0;   // scale-1 mask IoU on scene 0
  double final_cd = 0.0;    // chamfer(reconstruction, voxel means) on scene 0
  std::vector<double> loss_curve;
};

/// Fits the LiDAR-side encoder and the reconstruction decoder on dense
/// clouds. Deterministic given the seed; aborts with the iteration index on
/// a non-finite loss. Writes <out_dir>/stage1.ckpt and stage1_log.csv.
Stage1Result train_stage1(const std::vector<geometry::PointCloud>& lidar_clouds,
                          const nets::EncoderConfig& enc_cfg, const nets::DecoderConfig& dec_cfg,
                          const TrainConfig& cfg, const LossWeights& weights,
                          const std::string& out_dir);

struct PairedScene {
  geometry::PointCloud lidar;
  geometry::PointCloud radar;
};

struct Stage2Result {
  std::string checkpoint_path;
  std::string log_path;
  int iterations_run = 0;
  double first_decile_loss = 0.0;
  double last_decile_loss = 0.0;
  std::vector<double> loss_curve;
};

/// Trains the radar encoder and denoiser against latents from the frozen
/// stage-1 LiDAR encoder. The stage-2 checkpoint embeds the frozen stage-1
/// weights as well, so generation needs a single file.
Stage2Result train_stage2(const std::vector<PairedScene>& pairs,
                          const nets::DenoiserConfig& den_cfg, const TrainConfig& cfg,
                          const std::string& stage1_ckpt, const std::string& out_dir);

}  // namespace voxsr::train
