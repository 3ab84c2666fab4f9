#include "voxsr/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "voxsr/common/error.hpp"
#include "voxsr/metrics/metrics.hpp"
#include "voxsr/nets/serialize.hpp"
#include "voxsr/tensor/checkpoint.hpp"
#include "voxsr/tensor/optim.hpp"
#include "voxsr/voxel/targets.hpp"

namespace voxsr::train {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

double decile_mean(const std::vector<double>& curve, bool last) {
  const std::size_t k = std::max<std::size_t>(1, curve.size() / 10);
  double acc = 0.0;
  if (last) {
    for (std::size_t i = curve.size() - k; i < curve.size(); ++i) acc += curve[i];
  } else {
    for (std::size_t i = 0; i < k; ++i) acc += curve[i];
  }
  return acc / static_cast<double>(k);
}

}  // namespace

void TrainConfig::check() const {
  if (iterations < 1) fail_arg("train config: iterations must be positive");
  if (!(lr > 0)) fail_arg("train config: learning rate must be positive");
  if (timesteps < 2) fail_arg("train config: timesteps must be >= 2");
  if (log_every < 1) fail_arg("train config: log_every must be positive");
}

Stage1Result train_stage1(const std::vector<geometry::PointCloud>& lidar_clouds,
                          const nets::EncoderConfig& enc_cfg, const nets::DecoderConfig& dec_cfg,
                          const TrainConfig& cfg, const LossWeights& weights,
                          const std::string& out_dir) {
  cfg.check();
  if (lidar_clouds.empty()) fail_arg("train_stage1: empty dataset");
  std::filesystem::create_directories(out_dir);

  tensor::ParamStore ps;
  Rng init_rng(cfg.seed, "stage1-init");
  nets::VoxelEncoder encoder(enc_cfg, "enc_lidar", ps, init_rng);
  nets::ReconDecoder decoder(dec_cfg, "decoder", ps, init_rng);

  struct SceneData {
    voxel::VoxelizedCloud vc;
    voxel::ReconTargets targets;
    std::vector<double> raster;
  };
  std::vector<SceneData> scenes;
  scenes.reserve(lidar_clouds.size());
  for (const auto& cloud : lidar_clouds) {
    SceneData sd;
    sd.vc = voxel::voxelize(cloud, enc_cfg.grid);
    if (sd.vc.occupied_count() == 0) fail_arg("train_stage1: a scene has no in-bounds points");
    sd.targets = voxel::derive_targets(sd.vc);
    sd.raster = nets::VoxelEncoder::make_raster(sd.vc, enc_cfg.stats_channels);
    scenes.push_back(std::move(sd));
  }

  tensor::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  tensor::AdamW opt(ps.arrays(), opt_cfg);

  const tensor::Shape raster_shape{enc_cfg.in_channels(), enc_cfg.grid.dims[0],
                                   enc_cfg.grid.dims[1]};

  auto eval_scene0 = [&]() -> std::pair<double, double> {
    auto preds = decoder.forward(
        encoder.forward(tensor::Array::from_vector(raster_shape, scenes[0].raster)));
    const auto& full = preds[2];
    const double iou = voxel::voxel_iou(full.mask_prob.values(), scenes[0].targets.full.mask);
    geometry::PointCloud rec =
        voxel::reconstruct(full.mask_prob.values(), full.offset.values(), full.spec, 0.5);
    const geometry::PointCloud means = voxel::voxel_means(scenes[0].vc);
    const double cd =
        rec.empty() ? std::numeric_limits<double>::infinity() : metrics::chamfer(rec, means);
    return {iou, cd};
  };

  Stage1Result result;
  result.log_path = (std::filesystem::path(out_dir) / "stage1_log.csv").string();
  result.checkpoint_path = (std::filesystem::path(out_dir) / "stage1.ckpt").string();
  std::ofstream log(result.log_path, std::ios::trunc);
  log << "iteration,total,mask,offset,iou,cd\n";

  Rng order_rng(cfg.seed, "stage1-order");
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  for (int it = 1; it <= cfg.iterations; ++it) {
    if (cursor == order.size()) {
      order = epoch_order(scenes.size(), order_rng);
      cursor = 0;
    }
    const auto& scene = scenes[order[cursor++]];

    auto preds = decoder.forward(
        encoder.forward(tensor::Array::from_vector(raster_shape, scene.raster)));
    Stage1Loss loss = stage1_loss(preds, scene.targets, weights);
    const double total = loss.total.scalar();
    if (!std::isfinite(total)) fail("train_stage1: non-finite loss at iteration ", it);
    result.loss_curve.push_back(total);
    tensor::backward(loss.total);
    opt.step();
    opt.zero_grad();
    result.iterations_run = it;
    result.final_loss = total;

    if (it % cfg.log_every == 0 || it == cfg.iterations) {
      const auto [iou, cd] = eval_scene0();
      result.final_iou = iou;
      result.final_cd = cd;
      log << it << "," << fmt_double(total) << "," << fmt_double(loss.mask_term) << ","
          << fmt_double(loss.offset_term) << "," << fmt_double(iou) << "," << fmt_double(cd)
          << "\n";
      if (cfg.stop_iou > 0.0 && iou >= cfg.stop_iou && cd <= cfg.stop_cd) break;
    }
  }

  nlohmann::json meta;
  meta["stage"] = 1;
  meta["encoder"] = enc_cfg;
  meta["decoder"] = dec_cfg;
  meta["loss_weights"] = {{"lambda_mask", weights.lambda_mask},
                          {"lambda_offset", weights.lambda_offset}};
  tensor::save_checkpoint(result.checkpoint_path, ps, meta);
  return result;
}

Stage2Result train_stage2(const std::vector<PairedScene>& pairs,
                          const nets::DenoiserConfig& den_cfg, const TrainConfig& cfg,
                          const std::string& stage1_ckpt, const std::string& out_dir) {
  cfg.check();
  if (pairs.empty()) fail_arg("train_stage2: empty dataset");
  std::filesystem::create_directories(out_dir);

  const nlohmann::json meta1 = tensor::load_checkpoint_meta(stage1_ckpt);
  if (!meta1.contains("stage") || meta1["stage"] != 1) {
    fail("train_stage2: '", stage1_ckpt, "' is not a stage-1 checkpoint");
  }
  const auto enc_cfg = meta1["encoder"].get<nets::EncoderConfig>();
  const auto dec_cfg = meta1["decoder"].get<nets::DecoderConfig>();
  if (den_cfg.latent_channels != enc_cfg.latent_channels) {
    fail_arg("train_stage2: denoiser latent_channels ", den_cfg.latent_channels,
             " does not match the stage-1 encoder (", enc_cfg.latent_channels, ")");
  }

  // Frozen stage-1 halves; weights come from the checkpoint.
  tensor::ParamStore frozen;
  Rng frozen_rng(cfg.seed, "stage2-frozen");
  nets::VoxelEncoder enc_lidar(enc_cfg, "enc_lidar", frozen, frozen_rng);
  nets::ReconDecoder decoder(dec_cfg, "decoder", frozen, frozen_rng);
  tensor::load_checkpoint_into(stage1_ckpt, frozen);
  frozen.set_requires_grad("", false);

  tensor::ParamStore trained;
  Rng init_rng(cfg.seed, "stage2-init");
  nets::VoxelEncoder enc_radar(enc_cfg, "enc_radar", trained, init_rng);
  nets::Denoiser denoiser(den_cfg, "denoiser", trained, init_rng);

  const diffusion::NoiseSchedule sched = diffusion::make_schedule(cfg.timesteps, cfg.schedule);
  const tensor::Shape latent_shape = enc_cfg.latent_shape();
  const auto latent_n = static_cast<std::size_t>(tensor::numel(latent_shape));
  const tensor::Shape raster_shape{enc_cfg.in_channels(), enc_cfg.grid.dims[0],
                                   enc_cfg.grid.dims[1]};

  struct PairData {
    std::vector<double> f0;
    std::vector<double> radar_raster;
  };
  std::vector<PairData> data;
  data.reserve(pairs.size());
  for (const auto& pair : pairs) {
    PairData pd;
    const auto vc_l = voxel::voxelize(pair.lidar, enc_cfg.grid);
    if (vc_l.occupied_count() == 0) fail_arg("train_stage2: a LiDAR scene has no in-bounds points");
    pd.f0 = enc_lidar.encode(vc_l).values();
    pd.radar_raster = nets::VoxelEncoder::make_raster(voxel::voxelize(pair.radar, enc_cfg.grid),
                                                      enc_cfg.stats_channels);
    data.push_back(std::move(pd));
  }

  tensor::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  tensor::AdamW opt(trained.arrays(), opt_cfg);

  const diffusion::DenoiseFn denoise_fn = [&denoiser](const tensor::Array& f_t, int t,
                                                      const tensor::Array& c) {
    return denoiser.forward(f_t, t, c);
  };

  Stage2Result result;
  result.log_path = (std::filesystem::path(out_dir) / "stage2_log.csv").string();
  result.checkpoint_path = (std::filesystem::path(out_dir) / "stage2.ckpt").string();
  std::ofstream log(result.log_path, std::ios::trunc);
  log << "iteration,loss\n";

  Rng order_rng(cfg.seed, "stage2-order");
  Rng t_rng(cfg.seed, "stage2-timestep");
  Rng eps_rng(cfg.seed, "stage2-noise");
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  for (int it = 1; it <= cfg.iterations; ++it) {
    if (cursor == order.size()) {
      order = epoch_order(data.size(), order_rng);
      cursor = 0;
    }
    const auto& pd = data[order[cursor++]];
    const int t = static_cast<int>(t_rng.uniform_int(1, cfg.timesteps));
    const std::vector<double> eps = eps_rng.normal_vec(latent_n);

    tensor::Array cond =
        enc_radar.forward(tensor::Array::from_vector(raster_shape, pd.radar_raster));
    tensor::Array loss = diffusion::diffusion_loss(pd.f0, cond, t, eps, denoise_fn, latent_shape,
                                                   sched, cfg.target, cfg.loss_kind);
    const double value = loss.scalar();
    if (!std::isfinite(value)) fail("train_stage2: non-finite loss at iteration ", it);
    result.loss_curve.push_back(value);
    tensor::backward(loss);
    opt.step();
    opt.zero_grad();
    result.iterations_run = it;

    if (it % cfg.log_every == 0 || it == cfg.iterations) {
      log << it << "," << fmt_double(value) << "\n";
    }
  }

  result.first_decile_loss = decile_mean(result.loss_curve, false);
  result.last_decile_loss = decile_mean(result.loss_curve, true);

  tensor::ParamStore combined;
  for (const auto& [name, a] : frozen.items()) combined.add(name, a);
  for (const auto& [name, a] : trained.items()) combined.add(name, a);
  nlohmann::json meta;
  meta["stage"] = 2;
  meta["encoder"] = enc_cfg;
  meta["decoder"] = dec_cfg;
  meta["denoiser"] = den_cfg;
  meta["schedule"] = {{"timesteps", cfg.timesteps},
                      {"kind", diffusion::to_string(cfg.schedule)}};
  meta["target"] = diffusion::to_string(cfg.target);
  meta["loss_kind"] = diffusion::to_string(cfg.loss_kind);
  tensor::save_checkpoint(result.checkpoint_path, combined, meta);
  return result;
}

}  // namespace voxsr::train
