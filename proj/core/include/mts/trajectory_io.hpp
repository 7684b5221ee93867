#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "mts/servo.hpp"

namespace mts {

/// Per-step position (m), orientation quaternion [w, x, y, z], fruit fraction,
/// camera-frame gradient and residual, plus controller, scene and termination.
/// Reference images are not included.
nlohmann::json trajectory_to_json(const TrajectoryRecord& record);

/// Inverse of trajectory_to_json; recovered steps carry empty label images.
TrajectoryRecord trajectory_from_json(const nlohmann::json& doc);

}  // namespace mts
