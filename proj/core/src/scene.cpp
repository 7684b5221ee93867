#include "mts/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mts/json_support.hpp"
#include "mts/rng.hpp"

namespace mts {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid scenario config: " + what);
}

nlohmann::json interval_json(const Interval& r) { return nlohmann::json::array({r.lo, r.hi}); }

Interval interval_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("interval must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void ScenarioConfig::validate() const {
  require(initial_ee_position.finite(), "initial_end_effector_position");
  require(fruit_position.finite(), "fruit_position");
  require(occlusion_reference.finite(), "occlusion_reference_position");
  require(vertical_offset_range.valid(), "occlusion_random_vert_offset_range");
  require(horizontal_offset_range.valid(), "occlusion_random_horiz_offset_range");
  require(angle_offset_range.valid(), "occlusion_random_angle_offset_range");
  require(start_offset_range.valid(), "start_random_offset_range");
  require(std::isfinite(pixel_weight) && std::isfinite(mobility_weight), "objective weights");
  require(std::abs(pixel_weight + mobility_weight - 1.0) < 1e-12, "objective weights must sum to 1");
  require(camera_array_radius > 0.0 && std::isfinite(camera_array_radius), "camera_array_radius");
}

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{
      {"initial_end_effector_position", c.initial_ee_position},
      {"fruit_position", c.fruit_position},
      {"occlusion_reference_position", c.occlusion_reference},
      {"occlusion_random_vert_offset_range", interval_json(c.vertical_offset_range)},
      {"occlusion_random_horiz_offset_range", interval_json(c.horizontal_offset_range)},
      {"occlusion_random_angle_offset_range", interval_json(c.angle_offset_range)},
      {"objective_function_pixel_weight", c.pixel_weight},
      {"objective_function_mobility_weight", c.mobility_weight},
      {"camera_array_radius", c.camera_array_radius},
      {"start_random_offset_range", interval_json(c.start_offset_range)},
  };
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  ScenarioConfig out;
  j.at("initial_end_effector_position").get_to(out.initial_ee_position);
  j.at("fruit_position").get_to(out.fruit_position);
  j.at("occlusion_reference_position").get_to(out.occlusion_reference);
  out.vertical_offset_range = interval_from(j.at("occlusion_random_vert_offset_range"));
  out.horizontal_offset_range = interval_from(j.at("occlusion_random_horiz_offset_range"));
  out.angle_offset_range = interval_from(j.at("occlusion_random_angle_offset_range"));
  j.at("objective_function_pixel_weight").get_to(out.pixel_weight);
  j.at("objective_function_mobility_weight").get_to(out.mobility_weight);
  j.at("camera_array_radius").get_to(out.camera_array_radius);
  out.start_offset_range = interval_from(j.at("start_random_offset_range"));
  out.validate();
  c = out;
}

void to_json(nlohmann::json& j, const SceneGeometry& g) {
  j = {{"fruit_radius", g.fruit_radius},
       {"leaf_half_width", g.leaf_half_width},
       {"leaf_half_height", g.leaf_half_height}};
}

Vec3 SceneInstance::leaf_normal() const { return {-std::cos(leaf_yaw), -std::sin(leaf_yaw), 0.0}; }

Vec3 SceneInstance::leaf_width_axis() const { return {-std::sin(leaf_yaw), std::cos(leaf_yaw), 0.0}; }

SceneInstance SceneInstance::without_leaf() const {
  SceneInstance s = *this;
  s.has_leaf = false;
  return s;
}

void to_json(nlohmann::json& j, const SceneInstance& s) {
  j = {{"fruit_center", s.fruit_center},
       {"fruit_radius", s.fruit_radius},
       {"leaf_center", s.leaf_center},
       {"leaf_half_axes", {s.leaf_half_width, s.leaf_half_height}},
       {"leaf_yaw", s.leaf_yaw},
       {"has_leaf", s.has_leaf},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SceneInstance& s) {
  j.at("fruit_center").get_to(s.fruit_center);
  j.at("fruit_radius").get_to(s.fruit_radius);
  j.at("leaf_center").get_to(s.leaf_center);
  const auto& axes = j.at("leaf_half_axes");
  s.leaf_half_width = axes.at(0).get<double>();
  s.leaf_half_height = axes.at(1).get<double>();
  j.at("leaf_yaw").get_to(s.leaf_yaw);
  j.at("has_leaf").get_to(s.has_leaf);
  j.at("seed").get_to(s.seed);
}

SceneInstance sample_scene(const ScenarioConfig& config, std::uint64_t seed, const SceneGeometry& geometry) {
  Rng rng(seed);
  const double horizontal = rng.uniform(config.horizontal_offset_range.lo, config.horizontal_offset_range.hi);
  const double vertical = rng.uniform(config.vertical_offset_range.lo, config.vertical_offset_range.hi);
  const double yaw = rng.uniform(config.angle_offset_range.lo, config.angle_offset_range.hi);

  SceneInstance s;
  s.fruit_center = config.fruit_position;
  s.fruit_radius = geometry.fruit_radius;
  s.leaf_center = config.occlusion_reference + Vec3{0.0, horizontal, vertical};
  s.leaf_half_width = geometry.leaf_half_width;
  s.leaf_half_height = geometry.leaf_half_height;
  s.leaf_yaw = yaw;
  s.seed = seed;
  return s;
}

bool is_eligible(const SceneInstance& scene, const Pose& start, const FractionFn& fraction,
                 const EligibilityThresholds& thresholds) {
  const double occluded = fraction(scene, start);
  if (occluded < thresholds.min_fraction) return false;
  const double clear = fraction(scene.without_leaf(), start);
  return occluded <= thresholds.max_visible_share * clear;
}

Pose start_pose(const ScenarioConfig& config, const Vec3& start_offset) {
  return look_at(config.initial_ee_position + start_offset, config.fruit_position);
}

}  // namespace mts
