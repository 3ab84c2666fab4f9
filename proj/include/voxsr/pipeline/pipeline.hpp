#pragma once

#include <memory>
#include <string>

#include "voxsr/diffusion/diffusion.hpp"
#include "voxsr/nets/decoder.hpp"
#include "voxsr/nets/denoiser.hpp"
#include "voxsr/nets/encoder.hpp"
#include "voxsr/tensor/checkpoint.hpp"

namespace voxsr::pipeline {

/// Inference stack loaded from a stage-2 checkpoint: radar encoder,
/// denoiser, frozen LiDAR-side decoder, and the training noise schedule.
class Pipeline {
 public:
  static Pipeline load(const std::string& stage2_ckpt);

  /// radar cloud -> voxelize -> encode -> sample latent -> decode ->
  /// reconstruct at the mask threshold.
  geometry::PointCloud enhance(const geometry::PointCloud& radar, int steps,
                               std::uint64_t seed, double threshold,
                               const diffusion::SampleOptions& opts = {}) const;

  std::vector<double> encode_radar(const geometry::PointCloud& radar) const;
  std::vector<double> sample_latent(const std::vector<double>& condition, int steps,
                                    std::uint64_t seed,
                                    const diffusion::SampleOptions& opts = {}) const;
  geometry::PointCloud decode_latent(const std::vector<double>& latent,
                                     double threshold) const;

  const voxel::VoxelGridSpec& grid() const { return enc_cfg_.grid; }
  const diffusion::NoiseSchedule& schedule() const { return schedule_; }
  diffusion::PredTarget target() const { return target_; }

 private:
  Pipeline() = default;

  nets::EncoderConfig enc_cfg_;
  tensor::ParamStore params_;
  std::unique_ptr<nets::VoxelEncoder> enc_radar_;
  std::unique_ptr<nets::Denoiser> denoiser_;
  std::unique_ptr<nets::ReconDecoder> decoder_;
  diffusion::NoiseSchedule schedule_;
  diffusion::PredTarget target_ = diffusion::PredTarget::Noise;
};

}  // namespace voxsr::pipeline
