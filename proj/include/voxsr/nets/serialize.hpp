// JSON round trips for grid and network configurations; checkpoint metadata
// records the architecture so loads fail loudly on mismatch.

#pragma once

#include <json.hpp>

#include "voxsr/nets/decoder.hpp"
#include "voxsr/nets/denoiser.hpp"
#include "voxsr/nets/encoder.hpp"
#include "voxsr/voxel/grid.hpp"

namespace voxsr::voxel {

inline void to_json(nlohmann::json& j, const VoxelGridSpec& spec) {
  j["origin"] = {spec.origin.x(), spec.origin.y(), spec.origin.z()};
  j["dims"] = spec.dims;
  j["edge"] = {spec.edge.x(), spec.edge.y(), spec.edge.z()};
}

inline void from_json(const nlohmann::json& j, VoxelGridSpec& spec) {
  const auto o = j.at("origin").get<std::array<double, 3>>();
  const auto e = j.at("edge").get<std::array<double, 3>>();
  spec.origin = Vec3(o[0], o[1], o[2]);
  spec.edge = Vec3(e[0], e[1], e[2]);
  spec.dims = j.at("dims").get<std::array<int, 3>>();
}

}  // namespace voxsr::voxel

namespace voxsr::nets {

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j["grid"] = c.grid;
  j["stats_channels"] = c.stats_channels;
  j["width"] = c.width;
  j["latent_channels"] = c.latent_channels;
  j["groups"] = c.groups;
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.grid = j.at("grid").get<voxel::VoxelGridSpec>();
  c.stats_channels = j.at("stats_channels");
  c.width = j.at("width");
  c.latent_channels = j.at("latent_channels");
  c.groups = j.at("groups");
}

inline void to_json(nlohmann::json& j, const DenoiserConfig& c) {
  j["latent_channels"] = c.latent_channels;
  j["widths"] = c.widths;
  j["blocks_per_level"] = c.blocks_per_level;
  j["time_dim"] = c.time_dim;
  j["groups"] = c.groups;
}

inline void from_json(const nlohmann::json& j, DenoiserConfig& c) {
  c.latent_channels = j.at("latent_channels");
  c.widths = j.at("widths").get<std::array<int, 3>>();
  c.blocks_per_level = j.at("blocks_per_level");
  c.time_dim = j.at("time_dim");
  c.groups = j.at("groups");
}

inline void to_json(nlohmann::json& j, const DecoderConfig& c) {
  j["grid"] = c.grid;
  j["latent_channels"] = c.latent_channels;
  j["widths"] = c.widths;
  j["groups"] = c.groups;
}

inline void from_json(const nlohmann::json& j, DecoderConfig& c) {
  c.grid = j.at("grid").get<voxel::VoxelGridSpec>();
  c.latent_channels = j.at("latent_channels");
  c.widths = j.at("widths").get<std::array<int, 3>>();
  c.groups = j.at("groups");
}

}  // namespace voxsr::nets
