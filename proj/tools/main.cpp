// voxsr command-line entry point: synthetic data generation, preprocessing,
// two-stage training, generation, evaluation, registration, and gradient
// checking, all driven by one key-value config plus a seed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "voxsr/common/error.hpp"
#include "voxsr/geometry/io.hpp"
#include "voxsr/geometry/preprocess.hpp"
#include "voxsr/geometry/serialize.hpp"
#include "voxsr/metrics/metrics.hpp"
#include "voxsr/pipeline/config.hpp"
#include "voxsr/pipeline/pipeline.hpp"
#include "voxsr/registration/eval.hpp"
#include "voxsr/registration/icp.hpp"
#include "voxsr/synthdata/scene.hpp"
#include "voxsr/tensor/gradcheck.hpp"
#include "voxsr/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace voxsr;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

pipeline::RunConfig resolve_config(const GlobalArgs& args) {
  pipeline::RunConfig cfg = pipeline::load_run_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

void prepare_out_dir(const pipeline::RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  pipeline::echo_config(cfg, (fs::path(out_dir) / "config.resolved.cfg").string());
}

void mark_failed(const std::string& out_dir, const std::string& message) {
  std::error_code ec;
  if (fs::exists(out_dir, ec)) {
    std::ofstream marker(fs::path(out_dir) / "_FAILED");
    marker << message << "\n";
  }
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// dataset helpers ----------------------------------------------------------

std::vector<synthdata::SceneFrame> make_paired_dataset(const pipeline::RunConfig& cfg,
                                                       int count, std::uint64_t seed_base) {
  std::vector<synthdata::SceneFrame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    frames.push_back(
        synthdata::generate_scene(cfg.scene_spec(seed_base + static_cast<std::uint64_t>(k))));
  }
  return frames;
}

// command implementations --------------------------------------------------

int cmd_synth(const GlobalArgs& args, bool sequence) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);
  std::vector<synthdata::SceneFrame> frames;
  if (sequence) {
    frames = synthdata::generate_sequence(cfg.scene_spec(cfg.seed), cfg.synth_frames,
                                          cfg.motion_step());
  } else {
    frames = make_paired_dataset(cfg, cfg.synth_scenes, cfg.seed);
  }
  const auto manifest = synthdata::write_dataset(args.out_dir, frames, cfg.scene_spec(cfg.seed));
  std::size_t lidar_total = 0, radar_total = 0;
  for (const auto& f : frames) {
    lidar_total += f.lidar.size();
    radar_total += f.radar.size();
  }
  std::cout << "wrote " << frames.size() << " frames to " << manifest << " (|lidar| = "
            << lidar_total << ", |radar| = " << radar_total << ")\n";
  return 0;
}

int cmd_preprocess(const GlobalArgs& args, const std::string& manifest_path, int aggregate) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);
  const auto frames = synthdata::load_dataset(manifest_path);

  std::size_t written = 0;
  const int group = std::max(1, aggregate);
  for (std::size_t base = 0; base + static_cast<std::size_t>(group) <= frames.size();
       base += static_cast<std::size_t>(group)) {
    std::vector<std::pair<geometry::PointCloud, geometry::RigidTransform>> input;
    for (int k = 0; k < group; ++k) {
      const auto& f = frames[base + static_cast<std::size_t>(k)];
      geometry::PointCloud cleaned =
          geometry::remove_ground(f.radar, cfg.ground_thresh, cfg.ground_iters, cfg.seed);
      input.emplace_back(geometry::crop_fov(cleaned, cfg.fov), f.pose);
    }
    const auto merged = geometry::aggregate_frames(input);
    char name[64];
    std::snprintf(name, sizeof(name), "preprocessed_%04zu.ply", written);
    geometry::save_cloud(merged, (fs::path(args.out_dir) / name).string());
    ++written;
  }
  std::cout << "preprocessed " << written << " aggregated clouds into " << args.out_dir << "\n";
  return 0;
}

int cmd_train_stage1(const GlobalArgs& args, const std::string& manifest_path) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);

  std::vector<geometry::PointCloud> scenes;
  if (manifest_path.empty()) {
    for (const auto& f : make_paired_dataset(cfg, cfg.synth_scenes, cfg.seed)) {
      scenes.push_back(f.lidar);
    }
  } else {
    for (const auto& f : synthdata::load_dataset(manifest_path)) scenes.push_back(f.lidar);
  }

  const auto result = train::train_stage1(scenes, cfg.encoder_config(), cfg.decoder_config(),
                                          cfg.stage1_train_config(), cfg.loss_weights(),
                                          args.out_dir);
  std::cout << "stage-1 finished after " << result.iterations_run << " iterations: loss = "
            << fmt_double(result.final_loss) << ", IoU = " << fmt_double(result.final_iou)
            << ", CD = " << fmt_double(result.final_cd) << "\n"
            << "checkpoint: " << result.checkpoint_path << "\n";
  return 0;
}

int cmd_train_stage2(const GlobalArgs& args, const std::string& manifest_path,
                     const std::string& stage1_ckpt) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);

  std::vector<train::PairedScene> pairs;
  if (manifest_path.empty()) {
    for (const auto& f : make_paired_dataset(cfg, cfg.synth_scenes, cfg.seed)) {
      pairs.push_back({f.lidar, f.radar});
    }
  } else {
    for (const auto& f : synthdata::load_dataset(manifest_path)) {
      pairs.push_back({f.lidar, f.radar});
    }
  }

  const auto result = train::train_stage2(pairs, cfg.denoiser_config(),
                                          cfg.stage2_train_config(), stage1_ckpt, args.out_dir);
  std::cout << "stage-2 finished after " << result.iterations_run
            << " iterations: first-decile loss = " << fmt_double(result.first_decile_loss)
            << ", last-decile loss = " << fmt_double(result.last_decile_loss) << "\n"
            << "checkpoint: " << result.checkpoint_path << "\n";
  return 0;
}

int cmd_generate(const GlobalArgs& args, const std::string& ckpt_path,
                 const std::vector<std::string>& inputs, int steps, double threshold) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);
  const auto pipe = pipeline::Pipeline::load(ckpt_path);

  diffusion::SampleOptions opts;
  opts.clip_x0 = cfg.clip_x0;
  const int use_steps = steps > 0 ? steps : cfg.sample_steps;
  const double tau = threshold > 0 ? threshold : cfg.threshold;

  std::ofstream stats((fs::path(args.out_dir) / "generate_stats.csv").string(),
                      std::ios::trunc);
  stats << "input,points_in,points_out,densification\n";
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto radar = geometry::load_cloud(inputs[k]);
    const auto enhanced =
        pipe.enhance(radar, use_steps, cfg.seed + static_cast<std::uint64_t>(k), tau, opts);
    char name[64];
    std::snprintf(name, sizeof(name), "enhanced_%04zu.ply", k);
    const auto out_path = (fs::path(args.out_dir) / name).string();
    geometry::save_cloud(enhanced, out_path);
    const double ratio = radar.empty()
                             ? 0.0
                             : static_cast<double>(enhanced.size()) /
                                   static_cast<double>(radar.size());
    stats << inputs[k] << "," << radar.size() << "," << enhanced.size() << ","
          << fmt_double(ratio) << "\n";
    std::cout << inputs[k] << " -> " << out_path << " (" << radar.size() << " -> "
              << enhanced.size() << " points, x" << fmt_double(ratio) << ")\n";
  }
  return 0;
}

int cmd_evaluate(const GlobalArgs& args, const std::string& pairs_path) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);
  const auto metric_cfg = cfg.metric_config();

  std::ifstream manifest(pairs_path);
  if (!manifest) fail("cannot open pair manifest '", pairs_path, "'");

  std::ofstream csv((fs::path(args.out_dir) / "metrics.csv").string(), std::ios::trunc);
  csv << "generated,reference,cd,ucd,hd,mhd,umhd,fscore,jsd_bev\n";

  std::vector<geometry::PointCloud> gen_clouds, ref_clouds;
  nlohmann::json per_pair = nlohmann::json::array();
  std::map<std::string, double> sums;
  std::string line;
  int line_no = 0;
  std::size_t pairs = 0;
  const fs::path base = fs::path(pairs_path).parent_path();
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail("pair manifest '", pairs_path, "' line ", line_no,
           ": expected 'generated_path,reference_path'");
    }
    auto resolve = [&base](std::string p) {
      return fs::path(p).is_absolute() ? p : (base / p).string();
    };
    const std::string gen_path = resolve(line.substr(0, comma));
    const std::string ref_path = resolve(line.substr(comma + 1));
    const auto gen = geometry::load_cloud(gen_path);
    const auto ref = geometry::load_cloud(ref_path);
    const auto report = metrics::evaluate_pair(gen, ref, metric_cfg);
    csv << gen_path << "," << ref_path;
    for (const char* key : {"cd", "ucd", "hd", "mhd", "umhd", "fscore", "jsd_bev"}) {
      csv << "," << fmt_double(report.values.at(key));
      sums[key] += report.values.at(key);
    }
    csv << "\n";
    nlohmann::json entry = report.to_json();
    entry["generated"] = gen_path;
    entry["reference"] = ref_path;
    per_pair.push_back(std::move(entry));
    gen_clouds.push_back(std::move(gen));
    ref_clouds.push_back(std::move(ref));
    ++pairs;
  }
  if (pairs == 0) fail("pair manifest '", pairs_path, "' lists no pairs");

  nlohmann::json summary;
  summary["pairs"] = pairs;
  for (auto& [key, total] : sums) summary["mean"][key] = total / static_cast<double>(pairs);
  if (pairs >= 2) {
    summary["mmd_bev"] = metrics::mmd_bev(gen_clouds, ref_clouds, metric_cfg.bev);
  }
  summary["per_pair"] = std::move(per_pair);
  std::ofstream json_out((fs::path(args.out_dir) / "metrics.json").string(), std::ios::trunc);
  json_out << summary.dump(2) << "\n";

  std::cout << "evaluated " << pairs << " pairs; mean CD = "
            << fmt_double(summary["mean"]["cd"].get<double>()) << "\n";
  return 0;
}

int cmd_register(const GlobalArgs& args, const std::string& manifest_path,
                 const std::string& enhanced_dir) {
  const auto cfg = resolve_config(args);
  prepare_out_dir(cfg, args.out_dir);
  const auto frames = synthdata::load_dataset(manifest_path);

  // Consecutive frames whose ground-truth translation gap exceeds the
  // configured minimum form the test pairs.
  struct Pair {
    std::size_t i, j;
    geometry::RigidTransform gt;  // source (i) into target (j) frame
  };
  std::vector<Pair> selected;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto& a = frames[k - 1];
    const auto& b = frames[k];
    if ((a.pose.translation - b.pose.translation).norm() <= cfg.reg_pair_min_dist) continue;
    selected.push_back({k - 1, k, b.pose.inverse() * a.pose});
  }
  if (selected.empty()) {
    fail("register: no frame pairs pass the ", cfg.reg_pair_min_dist, " m distance filter");
  }

  auto cloud_for = [&](std::size_t idx) -> geometry::PointCloud {
    if (enhanced_dir.empty()) return frames[idx].radar;
    char name[64];
    std::snprintf(name, sizeof(name), "enhanced_%04zu.ply", idx);
    return geometry::load_cloud((fs::path(enhanced_dir) / name).string());
  };

  std::ofstream csv((fs::path(args.out_dir) / "registration.csv").string(), std::ios::trunc);
  csv << "source,target,re_deg,te_m,success,iterations,residual\n";
  std::vector<registration::RegResult> results;
  for (const auto& pair : selected) {
    const auto source = cloud_for(pair.i);
    const auto target = cloud_for(pair.j);
    const auto icp_result =
        registration::icp(source, target, geometry::RigidTransform::identity(), cfg.icp);
    auto eval = registration::evaluate_registration(icp_result.transform, pair.gt,
                                                    cfg.reg_thresholds);
    eval.iterations = icp_result.iterations;
    eval.final_residual = icp_result.final_residual;
    csv << pair.i << "," << pair.j << "," << fmt_double(eval.re_deg) << ","
        << fmt_double(eval.te_m) << "," << (eval.success ? 1 : 0) << "," << eval.iterations
        << "," << fmt_double(eval.final_residual) << "\n";
    results.push_back(eval);
  }

  const auto summary = registration::registration_recall(results);
  nlohmann::json j;
  j["pairs"] = summary.total;
  j["rr_pct"] = summary.recall_pct;
  j["re_deg"] = {{"succ", summary.re_succ ? nlohmann::json(*summary.re_succ) : nlohmann::json()},
                 {"all", summary.re_all}};
  j["te_m"] = {{"succ", summary.te_succ ? nlohmann::json(*summary.te_succ) : nlohmann::json()},
               {"all", summary.te_all}};
  j["clouds"] = enhanced_dir.empty() ? "raw" : "enhanced";
  std::ofstream json_out((fs::path(args.out_dir) / "registration.json").string(),
                         std::ios::trunc);
  json_out << j.dump(2) << "\n";

  std::cout << (enhanced_dir.empty() ? "raw" : "enhanced") << " registration: RR = "
            << fmt_double(summary.recall_pct) << "% over " << summary.total << " pairs"
            << " [succ./all] RE = "
            << (summary.re_succ ? fmt_double(*summary.re_succ) : std::string("-")) << "/"
            << fmt_double(summary.re_all) << " deg, TE = "
            << (summary.te_succ ? fmt_double(*summary.te_succ) : std::string("-")) << "/"
            << fmt_double(summary.te_all) << " m\n";
  return 0;
}

int cmd_gradcheck(const GlobalArgs& args) {
  const auto cfg = resolve_config(args);
  const auto results = tensor::run_gradchecks(cfg.seed, 10);
  bool all_pass = true;
  std::printf("%-24s %-14s %-10s %s\n", "op", "max_rel_err", "tolerance", "status");
  for (const auto& r : results) {
    std::printf("%-24s %-14.3e %-10.1e %s\n", r.name.c_str(), r.max_rel_err, r.tol,
                r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxsr: latent-voxel diffusion for point-cloud super-resolution"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "key-value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", args.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", args.seed, "run seed (overrides run.seed)");

  bool synth_sequence = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
  synth->add_flag("--sequence", synth_sequence,
                  "one scene observed along a motion path instead of independent scenes");

  std::string pre_manifest;
  int pre_aggregate = 1;
  auto* preprocess = app.add_subcommand("preprocess",
                                        "ground removal + FOV crop + frame aggregation");
  preprocess->add_option("--in", pre_manifest, "dataset manifest.json")->required();
  preprocess->add_option("--frames", pre_aggregate, "frames aggregated per output cloud");

  std::string train1_manifest;
  auto* train1 = app.add_subcommand("train-stage1", "fit the LiDAR encoder and decoder");
  train1->add_option("--in", train1_manifest,
                     "dataset manifest.json (omit to synthesize from the config)");

  std::string train2_manifest, train2_ckpt;
  auto* train2 = app.add_subcommand("train-stage2", "fit the radar encoder and denoiser");
  train2->add_option("--in", train2_manifest,
                     "dataset manifest.json (omit to synthesize from the config)");
  train2->add_option("--stage1", train2_ckpt, "stage-1 checkpoint")->required();

  std::string gen_ckpt;
  std::vector<std::string> gen_inputs;
  int gen_steps = 0;
  double gen_threshold = 0.0;
  auto* generate = app.add_subcommand("generate", "enhance radar clouds from a checkpoint");
  generate->add_option("--ckpt", gen_ckpt, "stage-2 checkpoint")->required();
  generate->add_option("--in", gen_inputs, "radar cloud files")->required();
  generate->add_option("--steps", gen_steps, "sampling steps (32|64|128)")
      ->check(CLI::IsMember({32, 64, 128}));
  generate->add_option("--threshold", gen_threshold, "mask threshold in (0,1)");

  std::string eval_pairs;
  auto* evaluate = app.add_subcommand("evaluate", "metric reports over a pair manifest");
  evaluate->add_option("--pairs", eval_pairs, "CSV manifest: generated_path,reference_path")
      ->required();

  std::string reg_manifest, reg_enhanced;
  auto* register_cmd = app.add_subcommand("register", "ICP registration over sequence pairs");
  register_cmd->add_option("--in", reg_manifest, "sequence dataset manifest.json")->required();
  register_cmd->add_option("--enhanced", reg_enhanced,
                           "directory of enhanced_%04zu.ply clouds to register instead of raw");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks for every op");

  // Let --config/--out/--seed appear after the subcommand name.
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  args.seed_set = seed_opt->count() > 0;

  try {
    if (synth->parsed()) return cmd_synth(args, synth_sequence);
    if (preprocess->parsed()) return cmd_preprocess(args, pre_manifest, pre_aggregate);
    if (train1->parsed()) return cmd_train_stage1(args, train1_manifest);
    if (train2->parsed()) return cmd_train_stage2(args, train2_manifest, train2_ckpt);
    if (generate->parsed()) {
      return cmd_generate(args, gen_ckpt, gen_inputs, gen_steps, gen_threshold);
    }
    if (evaluate->parsed()) return cmd_evaluate(args, eval_pairs);
    if (register_cmd->parsed()) return cmd_register(args, reg_manifest, reg_enhanced);
    if (gradcheck->parsed()) return cmd_gradcheck(args);
  } catch (const std::exception& e) {
    mark_failed(args.out_dir, e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
