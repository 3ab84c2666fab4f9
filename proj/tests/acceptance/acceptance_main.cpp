// Acceptance suite: one self-contained quantitative criterion per entry,
// each printing a single PASS/FAIL line. Run everything or one criterion
// with --criterion N. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "voxsr/common/error.hpp"
#include "voxsr/common/rng.hpp"
#include "voxsr/diffusion/diffusion.hpp"
#include "voxsr/geometry/preprocess.hpp"
#include "voxsr/metrics/metrics.hpp"
#include "voxsr/pipeline/config.hpp"
#include "voxsr/pipeline/pipeline.hpp"
#include "voxsr/registration/eval.hpp"
#include "voxsr/registration/icp.hpp"
#include "voxsr/synthdata/scene.hpp"
#include "voxsr/tensor/gradcheck.hpp"
#include "voxsr/train/trainer.hpp"
#include "voxsr/voxel/targets.hpp"

namespace fs = std::filesystem;
using namespace voxsr;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string g_workdir;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

pipeline::RunConfig desk_config() {
  return pipeline::load_run_config("");  // library defaults; no file, no env use
}

// ---------------------------------------------------------------- helpers

synthdata::SceneSpec desk_scene(std::uint64_t seed) {
  synthdata::SceneSpec spec;  // defaults match the desk grid region
  spec.seed = seed;
  return spec;
}

struct ToyArtifacts {
  std::string stage1_ckpt;
  std::string stage2_ckpt;
};

// Small two-stage run used by the criteria that need a live checkpoint but
// whose thresholds do not depend on model quality.
ToyArtifacts train_tiny_pipeline(const std::string& dir, std::uint64_t seed) {
  pipeline::RunConfig cfg = desk_config();
  std::vector<geometry::PointCloud> lidar;
  std::vector<train::PairedScene> pairs;
  for (std::uint64_t k = 0; k < 6; ++k) {
    const auto frame = synthdata::generate_scene(desk_scene(seed + k));
    lidar.push_back(frame.lidar);
    pairs.push_back({frame.lidar, frame.radar});
  }
  train::TrainConfig t1 = cfg.stage1_train_config();
  t1.iterations = 120;
  t1.seed = seed;
  const auto s1 = train::train_stage1(lidar, cfg.encoder_config(), cfg.decoder_config(), t1,
                                      cfg.loss_weights(), dir + "/tiny_s1");
  train::TrainConfig t2 = cfg.stage2_train_config();
  t2.iterations = 80;
  t2.seed = seed;
  const auto s2 = train::train_stage2(pairs, cfg.denoiser_config(), t2, s1.checkpoint_path,
                                      dir + "/tiny_s2");
  return {s1.checkpoint_path, s2.checkpoint_path};
}

// ---------------------------------------------------------------- criteria

// Forward-process equivalence: stepwise kernel vs closed form.
Outcome criterion_1() {
  const auto start = Clock::now();
  const auto sched = diffusion::make_schedule(1024, diffusion::ScheduleKind::Cosine);
  Rng rng(20240901);
  std::vector<double> f0(48);
  for (auto& v : f0) v = rng.uniform(-1.5, 1.5);

  std::string details;
  bool pass = true;
  for (int t : {1, 16, 64}) {
    const auto report = diffusion::chain_equivalence_check(f0, t, sched, 100000, 555 + t);
    pass = pass && report.pass;
    details += cat("t=", t, ": mean_z=", std::round(report.mean_z * 100) / 100,
                   " var_z=", std::round(report.var_z * 100) / 100, "; ");
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < 60.0;
  details += cat("elapsed ", std::round(elapsed * 10) / 10, "s (limit 60s)");
  return {pass, details};
}

// Schedule invariants for both kinds at T in {64, 256, 1024}.
Outcome criterion_2() {
  bool pass = true;
  std::string details;
  for (auto kind : {diffusion::ScheduleKind::Linear, diffusion::ScheduleKind::Cosine}) {
    for (int T : {64, 256, 1024}) {
      const auto s = diffusion::make_schedule(T, kind);
      bool decreasing = true;
      double prev = 1.0;
      for (int t = 1; t <= T; ++t) {
        decreasing = decreasing && s.alpha_bar_at(t) < prev;
        prev = s.alpha_bar_at(t);
      }
      const bool ok = decreasing && s.alpha_bar_at(1) > 0.99 && s.alpha_bar_at(T) < 0.01;
      pass = pass && ok;
      if (!ok) details += cat(diffusion::to_string(kind), "/T=", T, " violated; ");
    }
  }
  if (details.empty()) {
    details = "alpha_bar strictly decreasing, abar_1 > 0.99, abar_T < 0.01 for 6 schedules";
  }
  return {pass, details};
}

// Mask/offset round trip: reconstruct(derive_targets(voxelize(P))) equals
// the per-voxel means.
Outcome criterion_3() {
  const auto start = Clock::now();
  const auto cfg = desk_config();
  Rng rng(31337);
  double worst_cd = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    geometry::PointCloud cloud;
    if (trial % 2 == 0) {
      cloud = synthdata::generate_scene(desk_scene(900 + static_cast<std::uint64_t>(trial))).lidar;
    } else {
      for (int i = 0; i < 1500; ++i) {
        cloud.points.emplace_back(rng.uniform(-2.0, 1.999), rng.uniform(-2.0, 1.999),
                                  rng.uniform(-0.5, 0.499));
      }
    }
    const auto vc = voxel::voxelize(cloud, cfg.grid);
    const auto targets = voxel::derive_targets(vc);
    const auto rec = voxel::reconstruct(targets.full.mask, targets.full.offset, cfg.grid, 0.5);
    const auto means = voxel::voxel_means(vc);
    if (rec.size() != means.size()) {
      return {false, cat("trial ", trial, ": count mismatch ", rec.size(), " vs ", means.size())};
    }
    worst_cd = std::max(worst_cd, metrics::chamfer(rec, means));
  }
  const double elapsed = seconds_since(start);
  const bool pass = worst_cd <= 1e-18 && elapsed < 10.0;
  return {pass, cat("worst CD = ", worst_cd, " m^2 (limit 1e-18); elapsed ",
                    std::round(elapsed * 10) / 10, "s (limit 10s)")};
}

// Finite-difference gradient checks plus the conv adjoint identity.
Outcome criterion_4() {
  const auto results = tensor::run_gradchecks(424242, 10);
  bool pass = true;
  double worst = 0.0;
  std::string failures;
  for (const auto& r : results) {
    if (r.name != "conv3d_adjoint") worst = std::max(worst, r.max_rel_err);
    if (!r.pass) {
      pass = false;
      failures += r.name + " ";
    }
  }
  std::string details = cat(results.size(), " checks, worst rel err ", worst, " (limit 1e-4)");
  if (!failures.empty()) details += "; FAILED: " + failures;
  return {pass, details};
}

// Stage-1 overfit on a single desk-scale scene.
Outcome criterion_5() {
  const auto start = Clock::now();
  const auto cfg = desk_config();
  const auto scene = synthdata::generate_scene(desk_scene(5001));

  train::TrainConfig t1 = cfg.stage1_train_config();
  t1.iterations = 5000;
  t1.lr = 1e-3;
  t1.seed = 5;
  t1.log_every = 50;
  t1.stop_iou = 0.95;
  t1.stop_cd = cfg.grid.edge.maxCoeff();  // one voxel edge, 0.125 m

  const auto result = train::train_stage1({scene.lidar}, cfg.encoder_config(),
                                          cfg.decoder_config(), t1, cfg.loss_weights(),
                                          g_workdir + "/c5");
  const double elapsed = seconds_since(start);
  const bool pass = result.final_iou >= 0.95 && result.final_cd <= cfg.grid.edge.maxCoeff() &&
                    result.iterations_run <= 5000 && elapsed < 1200.0;
  return {pass, cat("IoU = ", result.final_iou, " (>= 0.95), CD = ", result.final_cd,
                    " m (<= ", cfg.grid.edge.maxCoeff(), "), ", result.iterations_run,
                    " iterations, ", std::round(elapsed), "s (limit 1200s)")};
}

// Stage-2 toy benchmark: generated clouds must beat the raw radar condition
// on CD for at least 80% of held-out frames with mean densification >= 6.
Outcome criterion_6() {
  const auto start = Clock::now();
  const auto cfg = desk_config();

  const int n_train = 200;
  const int n_test = 50;
  std::vector<geometry::PointCloud> lidar;
  std::vector<train::PairedScene> train_pairs;
  for (int k = 0; k < n_train; ++k) {
    const auto frame = synthdata::generate_scene(desk_scene(static_cast<std::uint64_t>(k)));
    lidar.push_back(frame.lidar);
    train_pairs.push_back({frame.lidar, frame.radar});
  }

  train::TrainConfig t1 = cfg.stage1_train_config();
  t1.iterations = 1200;
  t1.lr = 1e-3;
  t1.seed = 6;
  const auto s1 = train::train_stage1(lidar, cfg.encoder_config(), cfg.decoder_config(), t1,
                                      cfg.loss_weights(), g_workdir + "/c6_s1");

  train::TrainConfig t2 = cfg.stage2_train_config();
  t2.iterations = 6000;
  t2.lr = 1e-4;
  t2.seed = 6;
  t2.timesteps = 1024;
  t2.schedule = diffusion::ScheduleKind::Cosine;
  t2.target = diffusion::PredTarget::Noise;  // L2 on noise
  t2.loss_kind = diffusion::LossKind::L2;
  const auto s2 = train::train_stage2(train_pairs, cfg.denoiser_config(), t2,
                                      s1.checkpoint_path, g_workdir + "/c6_s2");

  const auto pipe = pipeline::Pipeline::load(s2.checkpoint_path);
  diffusion::SampleOptions opts;
  opts.clip_x0 = true;

  int wins = 0;
  double densification_sum = 0.0;
  std::ofstream log(g_workdir + "/c6_eval.csv", std::ios::trunc);
  log << "frame,cd_generated,cd_radar,points_generated,points_radar\n";
  for (int k = 0; k < n_test; ++k) {
    const auto frame =
        synthdata::generate_scene(desk_scene(100000 + static_cast<std::uint64_t>(k)));
    const auto enhanced =
        pipe.enhance(frame.radar, 128, 777 + static_cast<std::uint64_t>(k), 0.5, opts);
    if (enhanced.empty()) {
      log << k << ",inf,-,0," << frame.radar.size() << "\n";
      continue;
    }
    const double cd_gen = metrics::chamfer(enhanced, frame.lidar);
    const double cd_radar = metrics::chamfer(frame.radar, frame.lidar);
    wins += cd_gen < cd_radar ? 1 : 0;
    densification_sum +=
        static_cast<double>(enhanced.size()) / static_cast<double>(frame.radar.size());
    log << k << "," << cd_gen << "," << cd_radar << "," << enhanced.size() << ","
        << frame.radar.size() << "\n";
  }
  const double win_rate = static_cast<double>(wins) / n_test;
  const double mean_densification = densification_sum / n_test;
  const double elapsed = seconds_since(start);
  const bool pass = win_rate >= 0.8 && mean_densification >= 6.0 && elapsed < 7200.0;
  return {pass, cat("CD wins ", wins, "/", n_test, " (>= 80%), mean densification x",
                    std::round(mean_densification * 100) / 100, " (>= 6), stage-2 loss ",
                    s2.first_decile_loss, " -> ", s2.last_decile_loss, ", ",
                    std::round(elapsed), "s (limit 7200s)")};
}

// Sampler oracle recovery and per-seed determinism.
Outcome criterion_7() {
  const tensor::Shape shape{4, 4, 4};
  Rng rng(7007);
  std::vector<double> f0(64);
  for (auto& v : f0) v = rng.uniform(-0.9, 0.9);
  const std::vector<double> cond(64, 0.0);

  bool pass = true;
  std::string details;
  const auto sched = diffusion::make_schedule(128, diffusion::ScheduleKind::Cosine);

  const diffusion::DenoiseFn x0_oracle = [&f0, &shape](const tensor::Array&, int,
                                                       const tensor::Array&) {
    return tensor::Array::from_vector(shape, f0);
  };
  const diffusion::DenoiseFn noise_oracle = [&f0, &sched](const tensor::Array& f_t, int t,
                                                          const tensor::Array&) {
    const double ab = sched.alpha_bar_at(t);
    std::vector<double> eps(f_t.values().size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
      eps[i] = (f_t.values()[i] - std::sqrt(ab) * f0[i]) / std::sqrt(1.0 - ab);
    }
    return tensor::Array::from_vector(f_t.shape(), eps);
  };

  for (auto [name, oracle, target] :
       {std::tuple{"x0", &x0_oracle, diffusion::PredTarget::X0},
        std::tuple{"noise", &noise_oracle, diffusion::PredTarget::Noise}}) {
    const auto out = diffusion::sample(*oracle, cond, shape, 128, sched, target, 99);
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      worst = std::max(worst, std::abs(out[i] - f0[i]));
    }
    pass = pass && worst < 1e-6;
    details += cat(name, "-oracle err ", worst, "; ");
  }

  const auto sched_big = diffusion::make_schedule(1024, diffusion::ScheduleKind::Cosine);
  const diffusion::DenoiseFn net = [](const tensor::Array& f_t, int, const tensor::Array& c) {
    return tensor::add(tensor::scale(f_t, 0.8), tensor::scale(c, 0.1));
  };
  for (int steps : {32, 64, 128}) {
    const auto a = diffusion::sample(net, cond, shape, steps, sched_big,
                                     diffusion::PredTarget::Noise, 4242);
    const auto b = diffusion::sample(net, cond, shape, steps, sched_big,
                                     diffusion::PredTarget::Noise, 4242);
    pass = pass && a == b;
  }
  details += "deterministic at steps 32/64/128";
  return {pass, details};
}

// Metric equivalence against an independent brute-force double loop.
Outcome criterion_8() {
  Rng rng(8008);
  auto random_cloud = [&rng](std::size_t n) {
    geometry::PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
      c.points.emplace_back(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    }
    return c;
  };
  auto brute = [](const geometry::PointCloud& from, const geometry::PointCloud& to) {
    double mean_sq = 0.0, mean = 0.0, max = 0.0;
    for (const auto& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to.points) best = std::min(best, (p - q).squaredNorm());
      mean_sq += best;
      mean += std::sqrt(best);
      max = std::max(max, std::sqrt(best));
    }
    return std::array<double, 3>{mean_sq / from.size(), mean / from.size(), max};
  };

  bool exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_cloud(10 + static_cast<std::size_t>(rng.uniform_int(0, 190)));
    const auto b = random_cloud(10 + static_cast<std::size_t>(rng.uniform_int(0, 190)));
    const auto ab = brute(a, b);
    const auto ba = brute(b, a);
    exact = exact && metrics::chamfer(a, b) == ab[0] + ba[0];
    exact = exact && metrics::ucd(a, b) == ab[0];
    exact = exact && metrics::hausdorff(a, b) == std::max(ab[2], ba[2]);
    exact = exact && metrics::mhd(a, b) == std::max(ab[1], ba[1]);
    exact = exact && metrics::umhd(a, b) == ab[1];
    // brute f-score
    double tau = 0.5;
    std::size_t ha = 0, hb = 0;
    for (const auto& p : a.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : b.points) best = std::min(best, (p - q).squaredNorm());
      ha += best <= tau * tau ? 1 : 0;
    }
    for (const auto& q : b.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : a.points) best = std::min(best, (p - q).squaredNorm());
      hb += best <= tau * tau ? 1 : 0;
    }
    const double precision = static_cast<double>(ha) / a.size();
    const double recall = static_cast<double>(hb) / b.size();
    const double f = precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
    exact = exact && metrics::fscore(a, b, tau) == f;
  }

  // Symmetry and rigid invariance.
  double worst_sym = 0.0, worst_rigid = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_cloud(150);
    const auto b = random_cloud(120);
    worst_sym = std::max(worst_sym, std::abs(metrics::chamfer(a, b) - metrics::chamfer(b, a)));
    worst_sym = std::max(worst_sym,
                         std::abs(metrics::hausdorff(a, b) - metrics::hausdorff(b, a)));
    worst_sym = std::max(worst_sym, std::abs(metrics::mhd(a, b) - metrics::mhd(b, a)));
    const auto T = geometry::RigidTransform::from_axis_angle(
        geometry::Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized(),
        rng.uniform(-M_PI, M_PI),
        geometry::Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)));
    const auto ta = geometry::apply_transform(a, T);
    const auto tb = geometry::apply_transform(b, T);
    worst_rigid = std::max(worst_rigid,
                           std::abs(metrics::chamfer(a, b) - metrics::chamfer(ta, tb)));
    worst_rigid = std::max(worst_rigid,
                           std::abs(metrics::hausdorff(a, b) - metrics::hausdorff(ta, tb)));
    worst_rigid = std::max(worst_rigid, std::abs(metrics::mhd(a, b) - metrics::mhd(ta, tb)));
    worst_rigid = std::max(
        worst_rigid, std::abs(metrics::fscore(a, b, 0.5) - metrics::fscore(ta, tb, 0.5)));
  }
  const bool pass = exact && worst_sym < 1e-9 && worst_rigid < 1e-9;
  return {pass, cat("brute-force match ", exact ? "exact" : "BROKEN", ", symmetry dev ",
                    worst_sym, ", rigid dev ", worst_rigid, " (limits 1e-9)")};
}

// Registration: analytic rotation/translation errors, the success rule,
// randomized ICP recovery, and the raw-vs-enhanced harness.
Outcome criterion_9() {
  bool pass = true;
  std::string details;

  // Analytic cases.
  const auto identity = geometry::RigidTransform::identity();
  const auto same = registration::evaluate_registration(identity, identity);
  pass = pass && same.re_deg == 0.0 && same.te_m == 0.0 && same.success;
  const auto quarter = registration::evaluate_registration(
      geometry::RigidTransform::from_axis_angle(geometry::Vec3(0, 0, 1), M_PI / 2), identity);
  pass = pass && std::abs(quarter.re_deg - 90.0) < 1e-9 && !quarter.success;
  geometry::RigidTransform shifted;
  shifted.translation = geometry::Vec3(0.3, 0, 0);
  const auto near = registration::evaluate_registration(shifted, identity);
  pass = pass && std::abs(near.te_m - 0.3) < 1e-12 && near.success;
  geometry::RigidTransform at_limit;
  at_limit.translation = geometry::Vec3(0.5, 0, 0);
  pass = pass && !registration::evaluate_registration(at_limit, identity).success;
  details += "analytic RE/TE ok; ";

  // Randomized ICP recovery on structured scenes.
  Rng rng(9009);
  std::vector<registration::RegResult> results;
  for (int k = 0; k < 50; ++k) {
    const auto step = geometry::RigidTransform::from_axis_angle(
        geometry::Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized(),
        rng.uniform(0.0, 10.0 * M_PI / 180.0),
        geometry::Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                       rng.uniform(-0.2, 0.2)));
    const auto frames =
        synthdata::generate_sequence(desk_scene(7000 + static_cast<std::uint64_t>(k)), 2, step);
    const auto icp_result = registration::icp(frames[1].lidar, frames[0].lidar,
                                              geometry::RigidTransform::identity());
    results.push_back(
        registration::evaluate_registration(icp_result.transform, frames[1].pose));
  }
  const auto summary = registration::registration_recall(results);
  pass = pass && summary.recall_pct >= 95.0;
  details += cat("ICP recovery RR = ", summary.recall_pct, "% (>= 95%); ");

  // Raw-vs-enhanced harness on a sequence dataset.
  const auto artifacts = train_tiny_pipeline(g_workdir + "/c9", 77);
  const auto pipe = pipeline::Pipeline::load(artifacts.stage2_ckpt);
  const auto motion = geometry::RigidTransform::from_axis_angle(
      geometry::Vec3(0, 0, 1), 3.0 * M_PI / 180.0, geometry::Vec3(1.8, 0.4, 0.0));
  const auto frames = synthdata::generate_sequence(desk_scene(31415), 6, motion);

  diffusion::SampleOptions opts;
  opts.clip_x0 = true;
  std::ofstream report(g_workdir + "/c9_registration_report.txt", std::ios::trunc);
  for (bool enhanced_mode : {false, true}) {
    std::vector<registration::RegResult> mode_results;
    for (std::size_t k = 1; k < frames.size(); ++k) {
      const auto gt = frames[k].pose.inverse() * frames[k - 1].pose;
      if ((frames[k].pose.translation - frames[k - 1].pose.translation).norm() <= 1.5) continue;
      geometry::PointCloud source = frames[k - 1].radar;
      geometry::PointCloud target = frames[k].radar;
      if (enhanced_mode) {
        source = pipe.enhance(source, 32, 5000 + k, 0.5, opts);
        target = pipe.enhance(target, 32, 6000 + k, 0.5, opts);
        if (source.size() < 3 || target.size() < 3) continue;
      }
      registration::IcpOptions icp_opts;
      icp_opts.max_corr_dist = 2.5;  // identity init across ~1.8 m of motion
      const auto icp_result =
          registration::icp(source, target, geometry::RigidTransform::identity(), icp_opts);
      mode_results.push_back(registration::evaluate_registration(icp_result.transform, gt));
    }
    if (mode_results.empty()) {
      pass = false;
      details += "harness produced no pairs; ";
      continue;
    }
    const auto s = registration::registration_recall(mode_results);
    auto line = cat(enhanced_mode ? "enhanced" : "raw", ": RR ", s.recall_pct, "% [succ./all] RE ",
                    s.re_succ ? cat(*s.re_succ) : "-", "/", s.re_all, " deg, TE ",
                    s.te_succ ? cat(*s.te_succ) : "-", "/", s.te_all, " m over ", s.total,
                    " pairs");
    report << line << "\n";
  }
  details += "raw/enhanced harness report written";
  return {pass, details};
}

// Pinned loss constants, perfect-prediction losses, freeze contract.
Outcome criterion_10() {
  bool pass = true;
  std::string details;

  const train::LossWeights defaults;
  pass = pass && defaults.lambda_mask == 0.9 && defaults.lambda_offset == 0.1;
  const auto cfg = desk_config();
  pass = pass && cfg.lambda_mask == 0.9 && cfg.lambda_offset == 0.1;
  details += cat("lambda = (", defaults.lambda_mask, ", ", defaults.lambda_offset, "); ");

  // Perfect-prediction stage-1 loss.
  const auto scene = synthdata::generate_scene(desk_scene(10101));
  const auto targets = voxel::derive_targets(voxel::voxelize(scene.lidar, cfg.grid));
  std::array<nets::ScalePrediction, 3> perfect;
  for (int s = 0; s < 3; ++s) {
    const auto& t = targets.at(s);
    auto& p = perfect[static_cast<std::size_t>(s)];
    p.spec = t.spec;
    p.mask_prob = tensor::Array::from_vector({t.spec.dims[2], t.spec.dims[0], t.spec.dims[1]},
                                             t.mask);
    p.offset =
        tensor::Array::from_vector({3, t.spec.dims[2], t.spec.dims[0], t.spec.dims[1]}, t.offset);
  }
  const double stage1_perfect = train::stage1_loss(perfect, targets, defaults).total.scalar();
  pass = pass && stage1_perfect <= 1e-6;
  details += cat("perfect stage-1 loss ", stage1_perfect, " (<= 1e-6); ");

  const auto sched = diffusion::make_schedule(64, diffusion::ScheduleKind::Cosine);
  Rng rng(10);
  const std::vector<double> f0 = rng.normal_vec(64);
  const std::vector<double> eps = rng.normal_vec(64);
  const tensor::Shape shape{4, 4, 4};
  const diffusion::DenoiseFn eps_oracle = [&eps, &shape](const tensor::Array&, int,
                                                         const tensor::Array&) {
    return tensor::Array::from_vector(shape, eps);
  };
  const double stage2_perfect =
      diffusion::diffusion_loss(f0, tensor::Array::constant(shape, 0.0), 7, eps, eps_oracle,
                                shape, sched, diffusion::PredTarget::Noise,
                                diffusion::LossKind::L2)
          .scalar();
  pass = pass && stage2_perfect <= 1e-6;
  details += cat("perfect stage-2 loss ", stage2_perfect, " (<= 1e-6); ");

  // Bitwise freeze contract via a short stage-2 run.
  const auto cfg_small = desk_config();
  std::vector<geometry::PointCloud> lidar;
  std::vector<train::PairedScene> pairs;
  for (std::uint64_t k = 0; k < 4; ++k) {
    const auto frame = synthdata::generate_scene(desk_scene(400 + k));
    lidar.push_back(frame.lidar);
    pairs.push_back({frame.lidar, frame.radar});
  }
  train::TrainConfig t1 = cfg_small.stage1_train_config();
  t1.iterations = 60;
  t1.seed = 1;
  const auto s1 = train::train_stage1(lidar, cfg_small.encoder_config(),
                                      cfg_small.decoder_config(), t1, defaults,
                                      g_workdir + "/c10_s1");
  train::TrainConfig t2 = cfg_small.stage2_train_config();
  t2.iterations = 100;
  t2.seed = 1;
  const auto s2 = train::train_stage2(pairs, cfg_small.denoiser_config(), t2, s1.checkpoint_path,
                                      g_workdir + "/c10_s2");

  tensor::ParamStore before, after;
  Rng r1(1), r2(2);
  nets::VoxelEncoder e1(cfg_small.encoder_config(), "enc_lidar", before, r1);
  nets::ReconDecoder d1(cfg_small.decoder_config(), "decoder", before, r1);
  tensor::load_checkpoint_into(s1.checkpoint_path, before);
  nets::VoxelEncoder e2(cfg_small.encoder_config(), "enc_lidar", after, r2);
  nets::ReconDecoder d2(cfg_small.decoder_config(), "decoder", after, r2);
  nets::VoxelEncoder er(cfg_small.encoder_config(), "enc_radar", after, r2);
  nets::Denoiser dn(cfg_small.denoiser_config(), "denoiser", after, r2);
  tensor::load_checkpoint_into(s2.checkpoint_path, after);

  bool frozen_equal = true;
  for (const auto& [name, array] : before.items()) {
    frozen_equal = frozen_equal && after.get(name).values() == array.values();
  }
  pass = pass && frozen_equal;
  details += cat("freeze contract ", frozen_equal ? "bitwise intact" : "VIOLATED");
  return {pass, details};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::string workdir = (fs::temp_directory_path() / "voxsr_acceptance").string();
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--workdir DIR]\n", argv[0]);
      return 2;
    }
  }
  g_workdir = workdir;
  fs::create_directories(g_workdir);

  const std::vector<Criterion> criteria = {
      {1, "forward-process equivalence", criterion_1},
      {2, "noise schedule invariants", criterion_2},
      {3, "mask/offset round trip", criterion_3},
      {4, "gradient checks", criterion_4},
      {5, "stage-1 single-scene overfit", criterion_5},
      {6, "stage-2 toy benchmark", criterion_6},
      {7, "sampler oracle and determinism", criterion_7},
      {8, "metric oracle equivalence", criterion_8},
      {9, "registration protocol", criterion_9},
      {10, "loss constants and freeze contract", criterion_10},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, cat("exception: ", e.what())};
    }
    std::printf("[%s] criterion %d: %s — %s\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.details.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  return failures;
}
