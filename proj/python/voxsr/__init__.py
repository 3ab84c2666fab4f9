"""Latent-voxel diffusion for point-cloud super-resolution.

Thin Python surface over the C++ core: point-cloud I/O and preprocessing,
the voxel mask/offset round trip, noise schedules and the forward process,
evaluation metrics, ICP registration, synthetic paired scenes, and
checkpoint-driven enhancement.
"""

from voxsr._core import (
    Pipeline,
    apply_transform,
    chamfer,
    crop_fov,
    fscore,
    generate_scene,
    hausdorff,
    icp,
    jsd_bev,
    load_cloud,
    noise_schedule,
    q_sample,
    registration_errors,
    remove_ground,
    save_cloud,
    voxel_round_trip,
    __version__,
)

__all__ = [
    "Pipeline",
    "apply_transform",
    "chamfer",
    "crop_fov",
    "fscore",
    "generate_scene",
    "hausdorff",
    "icp",
    "jsd_bev",
    "load_cloud",
    "noise_schedule",
    "q_sample",
    "registration_errors",
    "remove_ground",
    "save_cloud",
    "voxel_round_trip",
    "__version__",
]
