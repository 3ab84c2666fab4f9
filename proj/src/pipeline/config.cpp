#include "voxsr/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "voxsr/common/error.hpp"

namespace voxsr::pipeline {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    fail_arg("config: key '", key, "' expects a number, got '", value, "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    fail_arg("config: key '", key, "' expects an integer, got '", value, "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail_arg("config: key '", key, "' expects true/false, got '", value, "'");
}

template <typename T, std::size_t N>
std::array<T, N> parse_tuple(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(is >> out[i])) fail_arg("config: key '", key, "' expects ", N, " values, got '", value,
                                  "'");
  }
  std::string rest;
  if (is >> rest) fail_arg("config: key '", key, "' expects ", N, " values, got '", value, "'");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T, std::size_t N>
std::string fmt_tuple(const std::array<T, N>& a) {
  std::ostringstream os;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) os << " ";
    if constexpr (std::is_same_v<T, double>) os << fmt(a[i]);
    else os << a[i];
  }
  return os.str();
}

struct Entry {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Entry> schema(RunConfig& c) {
  std::vector<Entry> e;
  auto add = [&e](std::string key, std::function<void(const std::string&)> set,
                  std::function<std::string()> get) {
    e.push_back({std::move(key), std::move(set), std::move(get)});
  };
  auto vec3 = [](geometry::Vec3& v) {
    return std::array<double, 3>{v.x(), v.y(), v.z()};
  };

  add("grid.origin",
      [&c](const std::string& v) {
        const auto a = parse_tuple<double, 3>("grid.origin", v);
        c.grid.origin = geometry::Vec3(a[0], a[1], a[2]);
      },
      [&c, vec3]() { return fmt_tuple(vec3(c.grid.origin)); });
  add("grid.dims",
      [&c](const std::string& v) { c.grid.dims = parse_tuple<int, 3>("grid.dims", v); },
      [&c]() { return fmt_tuple(c.grid.dims); });
  add("grid.edge",
      [&c](const std::string& v) {
        const auto a = parse_tuple<double, 3>("grid.edge", v);
        c.grid.edge = geometry::Vec3(a[0], a[1], a[2]);
      },
      [&c, vec3]() { return fmt_tuple(vec3(c.grid.edge)); });

  add("net.enc_width",
      [&c](const std::string& v) { c.enc_width = static_cast<int>(parse_int("net.enc_width", v)); },
      [&c]() { return std::to_string(c.enc_width); });
  add("net.enc_stats",
      [&c](const std::string& v) { c.enc_stats = static_cast<int>(parse_int("net.enc_stats", v)); },
      [&c]() { return std::to_string(c.enc_stats); });
  add("net.enc_groups",
      [&c](const std::string& v) {
        c.enc_groups = static_cast<int>(parse_int("net.enc_groups", v));
      },
      [&c]() { return std::to_string(c.enc_groups); });
  add("net.latent_channels",
      [&c](const std::string& v) {
        c.latent_channels = static_cast<int>(parse_int("net.latent_channels", v));
      },
      [&c]() { return std::to_string(c.latent_channels); });
  add("net.denoiser_widths",
      [&c](const std::string& v) {
        c.denoiser_widths = parse_tuple<int, 3>("net.denoiser_widths", v);
      },
      [&c]() { return fmt_tuple(c.denoiser_widths); });
  add("net.denoiser_blocks",
      [&c](const std::string& v) {
        c.denoiser_blocks = static_cast<int>(parse_int("net.denoiser_blocks", v));
      },
      [&c]() { return std::to_string(c.denoiser_blocks); });
  add("net.denoiser_groups",
      [&c](const std::string& v) {
        c.denoiser_groups = static_cast<int>(parse_int("net.denoiser_groups", v));
      },
      [&c]() { return std::to_string(c.denoiser_groups); });
  add("net.time_dim",
      [&c](const std::string& v) { c.time_dim = static_cast<int>(parse_int("net.time_dim", v)); },
      [&c]() { return std::to_string(c.time_dim); });
  add("net.decoder_widths",
      [&c](const std::string& v) {
        c.decoder_widths = parse_tuple<int, 3>("net.decoder_widths", v);
      },
      [&c]() { return fmt_tuple(c.decoder_widths); });
  add("net.decoder_groups",
      [&c](const std::string& v) {
        c.decoder_groups = static_cast<int>(parse_int("net.decoder_groups", v));
      },
      [&c]() { return std::to_string(c.decoder_groups); });

  add("diff.timesteps",
      [&c](const std::string& v) { c.timesteps = static_cast<int>(parse_int("diff.timesteps", v)); },
      [&c]() { return std::to_string(c.timesteps); });
  add("diff.schedule",
      [&c](const std::string& v) { c.schedule = diffusion::schedule_kind_from_string(v); },
      [&c]() { return diffusion::to_string(c.schedule); });
  add("diff.target",
      [&c](const std::string& v) { c.target = diffusion::pred_target_from_string(v); },
      [&c]() { return diffusion::to_string(c.target); });
  add("diff.loss", [&c](const std::string& v) { c.loss_kind = diffusion::loss_kind_from_string(v); },
      [&c]() { return diffusion::to_string(c.loss_kind); });
  add("diff.sample_steps",
      [&c](const std::string& v) {
        c.sample_steps = static_cast<int>(parse_int("diff.sample_steps", v));
      },
      [&c]() { return std::to_string(c.sample_steps); });
  add("diff.clip_x0", [&c](const std::string& v) { c.clip_x0 = parse_bool("diff.clip_x0", v); },
      [&c]() { return c.clip_x0 ? "true" : "false"; });

  add("train.stage1_iters",
      [&c](const std::string& v) {
        c.stage1_iters = static_cast<int>(parse_int("train.stage1_iters", v));
      },
      [&c]() { return std::to_string(c.stage1_iters); });
  add("train.stage1_lr",
      [&c](const std::string& v) { c.stage1_lr = parse_double("train.stage1_lr", v); },
      [&c]() { return fmt(c.stage1_lr); });
  add("train.stage2_iters",
      [&c](const std::string& v) {
        c.stage2_iters = static_cast<int>(parse_int("train.stage2_iters", v));
      },
      [&c]() { return std::to_string(c.stage2_iters); });
  add("train.stage2_lr",
      [&c](const std::string& v) { c.stage2_lr = parse_double("train.stage2_lr", v); },
      [&c]() { return fmt(c.stage2_lr); });
  add("train.weight_decay",
      [&c](const std::string& v) { c.weight_decay = parse_double("train.weight_decay", v); },
      [&c]() { return fmt(c.weight_decay); });
  add("train.log_every",
      [&c](const std::string& v) { c.log_every = static_cast<int>(parse_int("train.log_every", v)); },
      [&c]() { return std::to_string(c.log_every); });
  add("train.stop_iou", [&c](const std::string& v) { c.stop_iou = parse_double("train.stop_iou", v); },
      [&c]() { return fmt(c.stop_iou); });
  add("train.stop_cd", [&c](const std::string& v) { c.stop_cd = parse_double("train.stop_cd", v); },
      [&c]() { return fmt(c.stop_cd); });
  add("train.lambda_mask",
      [&c](const std::string& v) { c.lambda_mask = parse_double("train.lambda_mask", v); },
      [&c]() { return fmt(c.lambda_mask); });
  add("train.lambda_offset",
      [&c](const std::string& v) { c.lambda_offset = parse_double("train.lambda_offset", v); },
      [&c]() { return fmt(c.lambda_offset); });

  add("synth.region_min",
      [&c](const std::string& v) {
        const auto a = parse_tuple<double, 3>("synth.region_min", v);
        c.scene.region_min = geometry::Vec3(a[0], a[1], a[2]);
      },
      [&c, vec3]() { return fmt_tuple(vec3(c.scene.region_min)); });
  add("synth.region_max",
      [&c](const std::string& v) {
        const auto a = parse_tuple<double, 3>("synth.region_max", v);
        c.scene.region_max = geometry::Vec3(a[0], a[1], a[2]);
      },
      [&c, vec3]() { return fmt_tuple(vec3(c.scene.region_max)); });
  add("synth.walls",
      [&c](const std::string& v) { c.scene.walls = static_cast<int>(parse_int("synth.walls", v)); },
      [&c]() { return std::to_string(c.scene.walls); });
  add("synth.boxes",
      [&c](const std::string& v) { c.scene.boxes = static_cast<int>(parse_int("synth.boxes", v)); },
      [&c]() { return std::to_string(c.scene.boxes); });
  add("synth.poles",
      [&c](const std::string& v) { c.scene.poles = static_cast<int>(parse_int("synth.poles", v)); },
      [&c]() { return std::to_string(c.scene.poles); });
  add("synth.density",
      [&c](const std::string& v) { c.scene.density = parse_double("synth.density", v); },
      [&c]() { return fmt(c.scene.density); });
  add("synth.radar_keep_frac",
      [&c](const std::string& v) {
        c.scene.radar_keep_frac = parse_double("synth.radar_keep_frac", v);
      },
      [&c]() { return fmt(c.scene.radar_keep_frac); });
  add("synth.radar_jitter_sigma",
      [&c](const std::string& v) {
        c.scene.radar_jitter_sigma = parse_double("synth.radar_jitter_sigma", v);
      },
      [&c]() { return fmt(c.scene.radar_jitter_sigma); });
  add("synth.clutter_points",
      [&c](const std::string& v) {
        c.scene.clutter_points = static_cast<int>(parse_int("synth.clutter_points", v));
      },
      [&c]() { return std::to_string(c.scene.clutter_points); });
  add("synth.scenes",
      [&c](const std::string& v) { c.synth_scenes = static_cast<int>(parse_int("synth.scenes", v)); },
      [&c]() { return std::to_string(c.synth_scenes); });
  add("synth.frames",
      [&c](const std::string& v) { c.synth_frames = static_cast<int>(parse_int("synth.frames", v)); },
      [&c]() { return std::to_string(c.synth_frames); });
  add("synth.motion",
      [&c](const std::string& v) { c.synth_motion = parse_tuple<double, 4>("synth.motion", v); },
      [&c]() { return fmt_tuple(c.synth_motion); });

  add("preprocess.ground_thresh",
      [&c](const std::string& v) { c.ground_thresh = parse_double("preprocess.ground_thresh", v); },
      [&c]() { return fmt(c.ground_thresh); });
  add("preprocess.ground_iters",
      [&c](const std::string& v) {
        c.ground_iters = static_cast<int>(parse_int("preprocess.ground_iters", v));
      },
      [&c]() { return std::to_string(c.ground_iters); });
  add("fov.yaw_min",
      [&c](const std::string& v) { c.fov.yaw_min_deg = parse_double("fov.yaw_min", v); },
      [&c]() { return fmt(c.fov.yaw_min_deg); });
  add("fov.yaw_max",
      [&c](const std::string& v) { c.fov.yaw_max_deg = parse_double("fov.yaw_max", v); },
      [&c]() { return fmt(c.fov.yaw_max_deg); });
  add("fov.min_bound",
      [&c](const std::string& v) {
        const auto a = parse_tuple<double, 3>("fov.min_bound", v);
        c.fov.min_bound = geometry::Vec3(a[0], a[1], a[2]);
      },
      [&c, vec3]() { return fmt_tuple(vec3(c.fov.min_bound)); });
  add("fov.max_bound",
      [&c](const std::string& v) {
        const auto a = parse_tuple<double, 3>("fov.max_bound", v);
        c.fov.max_bound = geometry::Vec3(a[0], a[1], a[2]);
      },
      [&c, vec3]() { return fmt_tuple(vec3(c.fov.max_bound)); });

  add("metrics.fscore_tau",
      [&c](const std::string& v) { c.fscore_tau = parse_double("metrics.fscore_tau", v); },
      [&c]() { return fmt(c.fscore_tau); });
  add("metrics.bev_cell",
      [&c](const std::string& v) { c.bev_cell = parse_double("metrics.bev_cell", v); },
      [&c]() { return fmt(c.bev_cell); });
  add("metrics.mode_2d",
      [&c](const std::string& v) { c.metrics_2d = parse_bool("metrics.mode_2d", v); },
      [&c]() { return c.metrics_2d ? "true" : "false"; });

  add("reg.max_corr_dist",
      [&c](const std::string& v) { c.icp.max_corr_dist = parse_double("reg.max_corr_dist", v); },
      [&c]() { return fmt(c.icp.max_corr_dist); });
  add("reg.max_iters",
      [&c](const std::string& v) {
        c.icp.max_iters = static_cast<int>(parse_int("reg.max_iters", v));
      },
      [&c]() { return std::to_string(c.icp.max_iters); });
  add("reg.tol", [&c](const std::string& v) { c.icp.tol = parse_double("reg.tol", v); },
      [&c]() { return fmt(c.icp.tol); });
  add("reg.re_thresh",
      [&c](const std::string& v) { c.reg_thresholds.re_deg = parse_double("reg.re_thresh", v); },
      [&c]() { return fmt(c.reg_thresholds.re_deg); });
  add("reg.te_thresh",
      [&c](const std::string& v) { c.reg_thresholds.te_m = parse_double("reg.te_thresh", v); },
      [&c]() { return fmt(c.reg_thresholds.te_m); });
  add("reg.pair_min_dist",
      [&c](const std::string& v) { c.reg_pair_min_dist = parse_double("reg.pair_min_dist", v); },
      [&c]() { return fmt(c.reg_pair_min_dist); });

  add("run.seed",
      [&c](const std::string& v) {
        c.seed = static_cast<std::uint64_t>(parse_int("run.seed", v));
      },
      [&c]() { return std::to_string(c.seed); });
  add("run.threshold",
      [&c](const std::string& v) { c.threshold = parse_double("run.threshold", v); },
      [&c]() { return fmt(c.threshold); });

  return e;
}

Entry* find_entry(std::vector<Entry>& entries, const std::string& key) {
  for (auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::string env_name(const std::string& key) {
  std::string name = "VOXSR_";
  for (char ch : key) {
    name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return name;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  auto entries = schema(cfg);

  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) fail("cannot open config '", path, "'");
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail_arg("config '", path, "' line ", line_no, ": expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      Entry* entry = find_entry(entries, key);
      if (!entry) fail_arg("config '", path, "' line ", line_no, ": unknown key '", key, "'");
      entry->set(value);
    }
  }

  for (auto& entry : entries) {
    if (const char* v = std::getenv(env_name(entry.key).c_str())) entry.set(v);
  }
  return cfg;
}

std::string config_to_text(const RunConfig& cfg) {
  auto entries = schema(const_cast<RunConfig&>(cfg));
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.key < b.key; });
  std::string out;
  for (const auto& e : entries) out += e.key + " = " + e.get() + "\n";
  return out;
}

void echo_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail("cannot open '", path, "' for writing");
  os << config_to_text(cfg);
}

nets::EncoderConfig RunConfig::encoder_config() const {
  nets::EncoderConfig e;
  e.grid = grid;
  e.stats_channels = enc_stats;
  e.width = enc_width;
  e.latent_channels = latent_channels;
  e.groups = enc_groups;
  return e;
}

nets::DenoiserConfig RunConfig::denoiser_config() const {
  nets::DenoiserConfig d;
  d.latent_channels = latent_channels;
  d.widths = denoiser_widths;
  d.blocks_per_level = denoiser_blocks;
  d.time_dim = time_dim;
  d.groups = denoiser_groups;
  return d;
}

nets::DecoderConfig RunConfig::decoder_config() const {
  nets::DecoderConfig d;
  d.grid = grid;
  d.latent_channels = latent_channels;
  d.widths = decoder_widths;
  d.groups = decoder_groups;
  return d;
}

train::TrainConfig RunConfig::stage1_train_config() const {
  train::TrainConfig t;
  t.iterations = stage1_iters;
  t.lr = stage1_lr;
  t.weight_decay = weight_decay;
  t.seed = seed;
  t.log_every = log_every;
  t.stop_iou = stop_iou;
  t.stop_cd = stop_cd;
  return t;
}

train::TrainConfig RunConfig::stage2_train_config() const {
  train::TrainConfig t;
  t.iterations = stage2_iters;
  t.lr = stage2_lr;
  t.weight_decay = weight_decay;
  t.seed = seed;
  t.log_every = log_every;
  t.timesteps = timesteps;
  t.schedule = schedule;
  t.target = target;
  t.loss_kind = loss_kind;
  return t;
}

train::LossWeights RunConfig::loss_weights() const {
  return train::LossWeights{lambda_mask, lambda_offset};
}

metrics::MetricConfig RunConfig::metric_config() const {
  metrics::MetricConfig m;
  m.fscore_tau = fscore_tau;
  m.mode = metrics_2d ? metrics::MetricMode::Xy : metrics::MetricMode::Xyz;
  m.bev.min_x = grid.origin.x();
  m.bev.min_y = grid.origin.y();
  m.bev.cell = bev_cell;
  m.bev.nx = std::max(1, static_cast<int>(std::ceil(grid.dims[0] * grid.edge.x() / bev_cell)));
  m.bev.ny = std::max(1, static_cast<int>(std::ceil(grid.dims[1] * grid.edge.y() / bev_cell)));
  return m;
}

synthdata::SceneSpec RunConfig::scene_spec(std::uint64_t scene_seed) const {
  synthdata::SceneSpec s = scene;
  s.seed = scene_seed;
  return s;
}

geometry::RigidTransform RunConfig::motion_step() const {
  return geometry::RigidTransform::from_axis_angle(
      geometry::Vec3(0, 0, 1), synth_motion[3] * M_PI / 180.0,
      geometry::Vec3(synth_motion[0], synth_motion[1], synth_motion[2]));
}

}  // namespace voxsr::pipeline
