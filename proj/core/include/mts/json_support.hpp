#pragma once

#include <nlohmann/json.hpp>

#include "mts/geometry.hpp"

namespace mts {

// Vec3 as [x, y, z]; Rotation as [w, x, y, z]; Pose as {"position", "orientation"}.
void to_json(nlohmann::json& j, const Vec3& v);
void from_json(const nlohmann::json& j, Vec3& v);
void to_json(nlohmann::json& j, const Rotation& r);
void from_json(const nlohmann::json& j, Rotation& r);
void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);

}  // namespace mts
