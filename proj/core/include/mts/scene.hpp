#pragma once

#include <cstdint>
#include <functional>

#include <nlohmann/json_fwd.hpp>

#include "mts/geometry.hpp"

namespace mts {

/// Closed interval [lo, hi]. Zero width is allowed.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Simulation run parameters. Defaults reproduce the nominal harvesting setup:
/// camera start in front of the fruit with an occluding leaf between them.
struct ScenarioConfig {
  Vec3 initial_ee_position{0.04, 0.59, 0.68};
  Vec3 fruit_position{0.4, 0.6, 0.7};
  Vec3 occlusion_reference{0.3, 0.55, 0.7};
  Interval vertical_offset_range{-0.06, 0.06};
  Interval horizontal_offset_range{-0.08, 0.08};
  Interval angle_offset_range{-1.5707963267948966, 1.5707963267948966};
  double pixel_weight = 1.0;
  double mobility_weight = 0.0;
  double camera_array_radius = 0.07;
  /// Per-component start perturbation used by the randomized-start series.
  Interval start_offset_range{-0.05, 0.05};

  /// Throws std::invalid_argument on empty or non-finite ranges, non-finite
  /// positions, or weights that do not sum to one.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

void to_json(nlohmann::json& j, const ScenarioConfig& c);
/// Requires every key; validates the result.
void from_json(const nlohmann::json& j, ScenarioConfig& c);

/// Fixed object dimensions; not randomized.
struct SceneGeometry {
  double fruit_radius = 0.04;
  double leaf_half_width = 0.06;   // along the leaf's horizontal in-plane axis
  double leaf_half_height = 0.04;  // along world vertical
};

void to_json(nlohmann::json& j, const SceneGeometry& g);

/// One randomized fruit + leaf arrangement.
///
/// The leaf is a flat elliptical disc. At zero yaw its normal points along
/// world -x (toward the camera start) and its wide axis along world y; yaw
/// rotates it about the world vertical through its center.
struct SceneInstance {
  Vec3 fruit_center;
  double fruit_radius = 0.04;
  Vec3 leaf_center;
  double leaf_half_width = 0.06;
  double leaf_half_height = 0.04;
  double leaf_yaw = 0.0;
  bool has_leaf = true;
  std::uint64_t seed = 0;

  Vec3 leaf_normal() const;
  Vec3 leaf_width_axis() const;
  Vec3 leaf_height_axis() const { return {0.0, 0.0, 1.0}; }

  /// Same scene with the occluder removed.
  SceneInstance without_leaf() const;

  friend bool operator==(const SceneInstance&, const SceneInstance&) = default;
};

void to_json(nlohmann::json& j, const SceneInstance& s);
void from_json(const nlohmann::json& j, SceneInstance& s);

/// Pure function of (config, geometry, seed). Horizontal offsets are applied
/// along world y and vertical offsets along world z.
SceneInstance sample_scene(const ScenarioConfig& config, std::uint64_t seed,
                           const SceneGeometry& geometry = {});

struct EligibilityThresholds {
  double min_fraction = 0.001;
  /// Occluded start fraction must not exceed this share of the unoccluded one.
  double max_visible_share = 0.9;
};

/// Fruit fraction seen from a camera pose.
using FractionFn = std::function<double(const SceneInstance&, const Pose&)>;

/// A scene is worth servoing only when the fruit is partially occluded from
/// the start pose: visible, but noticeably less than with the leaf removed.
bool is_eligible(const SceneInstance& scene, const Pose& start_pose, const FractionFn& fraction,
                 const EligibilityThresholds& thresholds = {});

/// Start pose for a scenario: the configured start position looking at the
/// configured fruit position, shifted by `start_offset` (world frame).
Pose start_pose(const ScenarioConfig& config, const Vec3& start_offset = {});

}  // namespace mts
