#pragma once

#include <string>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::geometry {

enum class CloudFormat {
  Auto,      // by extension on save, by content sniffing on load
  PlyBinary, // binary_little_endian 1.0
  PlyAscii,
  Xyz,       // whitespace-separated "x y z" lines
};

/// Reads a PLY (ASCII or binary little-endian) or XYZ text file.
/// Coordinates are stored as 32-bit floats on disk; x, y, z are required,
/// any additional float/double vertex property becomes an attr channel.
/// Malformed input raises std::runtime_error naming the byte offset (PLY)
/// or line number (XYZ).
PointCloud load_cloud(const std::string& path, CloudFormat format = CloudFormat::Auto);

/// Writes the cloud; format Auto picks by extension (.ply -> binary PLY,
/// .xyz/.txt -> XYZ text). Coordinates are written as 32-bit floats, so a
/// save/load round trip is bitwise exact at float precision.
void save_cloud(const PointCloud& cloud, const std::string& path,
                CloudFormat format = CloudFormat::Auto);

}  // namespace voxsr::geometry
