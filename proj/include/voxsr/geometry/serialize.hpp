#pragma once

#include <json.hpp>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::geometry {

inline void to_json(nlohmann::json& j, const RigidTransform& T) {
  std::array<double, 9> r;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      r[static_cast<std::size_t>(row * 3 + col)] = T.rotation(row, col);
    }
  }
  j["rotation"] = r;
  j["translation"] = {T.translation.x(), T.translation.y(), T.translation.z()};
}

inline void from_json(const nlohmann::json& j, RigidTransform& T) {
  const auto r = j.at("rotation").get<std::array<double, 9>>();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      T.rotation(row, col) = r[static_cast<std::size_t>(row * 3 + col)];
    }
  }
  const auto t = j.at("translation").get<std::array<double, 3>>();
  T.translation = Vec3(t[0], t[1], t[2]);
}

}  // namespace voxsr::geometry
