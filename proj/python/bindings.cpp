// Python bindings for the main operations: clouds and transforms, the
// voxel round trip, schedules and sampling, metrics, ICP, the synthetic
// scene generator, and checkpoint-driven enhancement.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "voxsr/diffusion/diffusion.hpp"
#include "voxsr/geometry/io.hpp"
#include "voxsr/geometry/preprocess.hpp"
#include "voxsr/metrics/bev.hpp"
#include "voxsr/metrics/metrics.hpp"
#include "voxsr/pipeline/pipeline.hpp"
#include "voxsr/registration/eval.hpp"
#include "voxsr/registration/icp.hpp"
#include "voxsr/synthdata/scene.hpp"
#include "voxsr/voxel/targets.hpp"

namespace py = pybind11;
using namespace voxsr;

namespace {

using ArrayD = py::array_t<double, py::array::c_style | py::array::forcecast>;

geometry::PointCloud cloud_from_numpy(const ArrayD& points) {
  if (points.ndim() != 2 || points.shape(1) != 3) {
    throw std::invalid_argument("points must have shape (n, 3)");
  }
  geometry::PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(points.shape(0)));
  const auto view = points.unchecked<2>();
  for (py::ssize_t i = 0; i < points.shape(0); ++i) {
    cloud.points.emplace_back(view(i, 0), view(i, 1), view(i, 2));
  }
  return cloud;
}

py::array_t<double> cloud_to_numpy(const geometry::PointCloud& cloud) {
  py::array_t<double> out({static_cast<py::ssize_t>(cloud.size()), py::ssize_t(3)});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    view(static_cast<py::ssize_t>(i), 0) = cloud.points[i].x();
    view(static_cast<py::ssize_t>(i), 1) = cloud.points[i].y();
    view(static_cast<py::ssize_t>(i), 2) = cloud.points[i].z();
  }
  return out;
}

geometry::RigidTransform transform_from_numpy(const ArrayD& rotation, const ArrayD& translation) {
  if (rotation.ndim() != 2 || rotation.shape(0) != 3 || rotation.shape(1) != 3) {
    throw std::invalid_argument("rotation must have shape (3, 3)");
  }
  if (translation.ndim() != 1 || translation.shape(0) != 3) {
    throw std::invalid_argument("translation must have shape (3,)");
  }
  geometry::RigidTransform T;
  const auto r = rotation.unchecked<2>();
  const auto t = translation.unchecked<1>();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) T.rotation(i, j) = r(i, j);
    T.translation[i] = t(i);
  }
  T.check_valid(1e-6);
  return T;
}

voxel::VoxelGridSpec grid_from_args(const std::array<double, 3>& origin,
                                    const std::array<int, 3>& dims,
                                    const std::array<double, 3>& edge) {
  voxel::VoxelGridSpec spec;
  spec.origin = geometry::Vec3(origin[0], origin[1], origin[2]);
  spec.dims = dims;
  spec.edge = geometry::Vec3(edge[0], edge[1], edge[2]);
  spec.check_valid();
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent-voxel diffusion point-cloud super-resolution core";

  // ---- geometry ----
  m.def("load_cloud",
        [](const std::string& path) { return cloud_to_numpy(geometry::load_cloud(path)); },
        py::arg("path"));
  m.def("save_cloud",
        [](const ArrayD& points, const std::string& path) {
          geometry::save_cloud(cloud_from_numpy(points), path);
        },
        py::arg("points"), py::arg("path"));
  m.def("apply_transform",
        [](const ArrayD& points, const ArrayD& rotation, const ArrayD& translation) {
          return cloud_to_numpy(geometry::apply_transform(
              cloud_from_numpy(points), transform_from_numpy(rotation, translation)));
        },
        py::arg("points"), py::arg("rotation"), py::arg("translation"));
  m.def("remove_ground",
        [](const ArrayD& points, double dist_thresh, int max_iters, std::uint64_t seed) {
          return cloud_to_numpy(
              geometry::remove_ground(cloud_from_numpy(points), dist_thresh, max_iters, seed));
        },
        py::arg("points"), py::arg("dist_thresh") = 0.05, py::arg("max_iters") = 128,
        py::arg("seed") = 0);
  m.def("crop_fov",
        [](const ArrayD& points, double yaw_min_deg, double yaw_max_deg,
           const std::array<double, 3>& min_bound, const std::array<double, 3>& max_bound) {
          geometry::FovSpec fov;
          fov.yaw_min_deg = yaw_min_deg;
          fov.yaw_max_deg = yaw_max_deg;
          fov.min_bound = geometry::Vec3(min_bound[0], min_bound[1], min_bound[2]);
          fov.max_bound = geometry::Vec3(max_bound[0], max_bound[1], max_bound[2]);
          return cloud_to_numpy(geometry::crop_fov(cloud_from_numpy(points), fov));
        },
        py::arg("points"), py::arg("yaw_min_deg") = -180.0, py::arg("yaw_max_deg") = 180.0,
        py::arg("min_bound") = std::array<double, 3>{-1e30, -1e30, -1e30},
        py::arg("max_bound") = std::array<double, 3>{1e30, 1e30, 1e30});

  // ---- voxel round trip ----
  m.def("voxel_round_trip",
        [](const ArrayD& points, const std::array<double, 3>& origin,
           const std::array<int, 3>& dims, const std::array<double, 3>& edge,
           double threshold) {
          const auto spec = grid_from_args(origin, dims, edge);
          const auto vc = voxel::voxelize(cloud_from_numpy(points), spec);
          const auto targets = voxel::derive_targets(vc);
          py::dict out;
          out["reconstructed"] = cloud_to_numpy(
              voxel::reconstruct(targets.full.mask, targets.full.offset, spec, threshold));
          out["voxel_means"] = cloud_to_numpy(voxel::voxel_means(vc));
          out["occupied"] = vc.occupied_count();
          out["dropped"] = vc.dropped;
          return out;
        },
        py::arg("points"), py::arg("origin"), py::arg("dims"), py::arg("edge"),
        py::arg("threshold") = 0.5);

  // ---- diffusion ----
  m.def("noise_schedule",
        [](int timesteps, const std::string& kind) {
          const auto s =
              diffusion::make_schedule(timesteps, diffusion::schedule_kind_from_string(kind));
          py::dict out;
          out["beta"] = py::array_t<double>(static_cast<py::ssize_t>(s.beta.size()),
                                            s.beta.data());
          out["alpha_bar"] = py::array_t<double>(static_cast<py::ssize_t>(s.alpha_bar.size()),
                                                 s.alpha_bar.data());
          return out;
        },
        py::arg("timesteps"), py::arg("kind") = "cosine");
  m.def("q_sample",
        [](const ArrayD& f0, int t, const ArrayD& eps, int timesteps, const std::string& kind) {
          const auto s =
              diffusion::make_schedule(timesteps, diffusion::schedule_kind_from_string(kind));
          std::vector<double> f0v(f0.data(), f0.data() + f0.size());
          std::vector<double> epsv(eps.data(), eps.data() + eps.size());
          const auto out = diffusion::q_sample(f0v, t, epsv, s);
          return py::array_t<double>(static_cast<py::ssize_t>(out.size()), out.data());
        },
        py::arg("f0"), py::arg("t"), py::arg("eps"), py::arg("timesteps") = 1024,
        py::arg("kind") = "cosine");

  // ---- metrics ----
  m.def("chamfer",
        [](const ArrayD& a, const ArrayD& b, bool two_d) {
          return metrics::chamfer(cloud_from_numpy(a), cloud_from_numpy(b),
                                  two_d ? metrics::MetricMode::Xy : metrics::MetricMode::Xyz);
        },
        py::arg("a"), py::arg("b"), py::arg("two_d") = false);
  m.def("hausdorff",
        [](const ArrayD& a, const ArrayD& b, bool two_d) {
          return metrics::hausdorff(cloud_from_numpy(a), cloud_from_numpy(b),
                                    two_d ? metrics::MetricMode::Xy : metrics::MetricMode::Xyz);
        },
        py::arg("a"), py::arg("b"), py::arg("two_d") = false);
  m.def("fscore",
        [](const ArrayD& a, const ArrayD& b, double tau) {
          return metrics::fscore(cloud_from_numpy(a), cloud_from_numpy(b), tau);
        },
        py::arg("a"), py::arg("b"), py::arg("tau") = 0.1);
  m.def("jsd_bev",
        [](const ArrayD& a, const ArrayD& b, double min_x, double min_y, int nx, int ny,
           double cell) {
          metrics::BevGridSpec spec{min_x, min_y, nx, ny, cell};
          return metrics::jsd_bev(cloud_from_numpy(a), cloud_from_numpy(b), spec);
        },
        py::arg("a"), py::arg("b"), py::arg("min_x") = -2.0, py::arg("min_y") = -2.0,
        py::arg("nx") = 8, py::arg("ny") = 8, py::arg("cell") = 0.5);

  // ---- registration ----
  m.def("icp",
        [](const ArrayD& source, const ArrayD& target, int max_iters, double tol,
           double max_corr_dist) {
          registration::IcpOptions opts;
          opts.max_iters = max_iters;
          opts.tol = tol;
          opts.max_corr_dist = max_corr_dist;
          const auto result =
              registration::icp(cloud_from_numpy(source), cloud_from_numpy(target),
                                geometry::RigidTransform::identity(), opts);
          py::dict out;
          py::array_t<double> rot({py::ssize_t(3), py::ssize_t(3)});
          auto rview = rot.mutable_unchecked<2>();
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) rview(i, j) = result.transform.rotation(i, j);
          }
          out["rotation"] = rot;
          out["translation"] = py::array_t<double>(3, result.transform.translation.data());
          out["iterations"] = result.iterations;
          out["residual"] = result.final_residual;
          return out;
        },
        py::arg("source"), py::arg("target"), py::arg("max_iters") = 50, py::arg("tol") = 1e-8,
        py::arg("max_corr_dist") = 1.0);
  m.def("registration_errors",
        [](const ArrayD& rot_est, const ArrayD& t_est, const ArrayD& rot_gt, const ArrayD& t_gt) {
          const auto result = registration::evaluate_registration(
              transform_from_numpy(rot_est, t_est), transform_from_numpy(rot_gt, t_gt));
          py::dict out;
          out["re_deg"] = result.re_deg;
          out["te_m"] = result.te_m;
          out["success"] = result.success;
          return out;
        },
        py::arg("rotation_est"), py::arg("translation_est"), py::arg("rotation_gt"),
        py::arg("translation_gt"));

  // ---- synthetic data ----
  m.def("generate_scene",
        [](std::uint64_t seed, double density, double radar_keep_frac, double jitter_sigma,
           int clutter_points) {
          synthdata::SceneSpec spec;
          spec.seed = seed;
          spec.density = density;
          spec.radar_keep_frac = radar_keep_frac;
          spec.radar_jitter_sigma = jitter_sigma;
          spec.clutter_points = clutter_points;
          const auto frame = synthdata::generate_scene(spec);
          py::dict out;
          out["lidar"] = cloud_to_numpy(frame.lidar);
          out["radar"] = cloud_to_numpy(frame.radar);
          return out;
        },
        py::arg("seed") = 0, py::arg("density") = 300.0, py::arg("radar_keep_frac") = 0.025,
        py::arg("jitter_sigma") = 0.03, py::arg("clutter_points") = 24);

  // ---- pipeline ----
  py::class_<pipeline::Pipeline>(m, "Pipeline")
      .def_static("load", &pipeline::Pipeline::load, py::arg("stage2_checkpoint"))
      .def("enhance",
           [](const pipeline::Pipeline& self, const ArrayD& radar, int steps,
              std::uint64_t seed, double threshold, bool clip_x0) {
             diffusion::SampleOptions opts;
             opts.clip_x0 = clip_x0;
             return cloud_to_numpy(
                 self.enhance(cloud_from_numpy(radar), steps, seed, threshold, opts));
           },
           py::arg("radar"), py::arg("steps") = 128, py::arg("seed") = 0,
           py::arg("threshold") = 0.5, py::arg("clip_x0") = true);

  m.attr("__version__") = "0.1.0";
}
