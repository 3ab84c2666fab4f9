#include "voxsr/pipeline/pipeline.hpp"

#include "voxsr/common/error.hpp"
#include "voxsr/nets/serialize.hpp"
#include "voxsr/voxel/targets.hpp"

namespace voxsr::pipeline {

Pipeline Pipeline::load(const std::string& stage2_ckpt) {
  const nlohmann::json meta = tensor::load_checkpoint_meta(stage2_ckpt);
  if (!meta.contains("stage") || meta["stage"] != 2) {
    fail("pipeline: '", stage2_ckpt, "' is not a stage-2 checkpoint");
  }

  Pipeline p;
  p.enc_cfg_ = meta["encoder"].get<nets::EncoderConfig>();
  const auto dec_cfg = meta["decoder"].get<nets::DecoderConfig>();
  const auto den_cfg = meta["denoiser"].get<nets::DenoiserConfig>();

  Rng init_rng(0, "pipeline-load");  // values are overwritten by the checkpoint
  nets::VoxelEncoder enc_lidar(p.enc_cfg_, "enc_lidar", p.params_, init_rng);
  p.decoder_ = std::make_unique<nets::ReconDecoder>(dec_cfg, "decoder", p.params_, init_rng);
  p.enc_radar_ = std::make_unique<nets::VoxelEncoder>(p.enc_cfg_, "enc_radar", p.params_,
                                                      init_rng);
  p.denoiser_ = std::make_unique<nets::Denoiser>(den_cfg, "denoiser", p.params_, init_rng);
  tensor::load_checkpoint_into(stage2_ckpt, p.params_);
  p.params_.set_requires_grad("", false);

  p.schedule_ = diffusion::make_schedule(
      meta["schedule"]["timesteps"].get<int>(),
      diffusion::schedule_kind_from_string(meta["schedule"]["kind"].get<std::string>()));
  p.target_ = diffusion::pred_target_from_string(meta["target"].get<std::string>());
  return p;
}

std::vector<double> Pipeline::encode_radar(const geometry::PointCloud& radar) const {
  return enc_radar_->encode(voxel::voxelize(radar, enc_cfg_.grid)).values();
}

std::vector<double> Pipeline::sample_latent(const std::vector<double>& condition, int steps,
                                            std::uint64_t seed,
                                            const diffusion::SampleOptions& opts) const {
  const diffusion::DenoiseFn fn = [this](const tensor::Array& f_t, int t,
                                         const tensor::Array& c) {
    return denoiser_->forward(f_t, t, c);
  };
  return diffusion::sample(fn, condition, enc_cfg_.latent_shape(), steps, schedule_, target_,
                           seed, opts);
}

geometry::PointCloud Pipeline::decode_latent(const std::vector<double>& latent,
                                             double threshold) const {
  const auto preds =
      decoder_->forward(tensor::Array::from_vector(enc_cfg_.latent_shape(), latent));
  const auto& full = preds[2];
  return voxel::reconstruct(full.mask_prob.values(), full.offset.values(), full.spec, threshold);
}

geometry::PointCloud Pipeline::enhance(const geometry::PointCloud& radar, int steps,
                                       std::uint64_t seed, double threshold,
                                       const diffusion::SampleOptions& opts) const {
  return decode_latent(sample_latent(encode_radar(radar), steps, seed, opts), threshold);
}

}  // namespace voxsr::pipeline
