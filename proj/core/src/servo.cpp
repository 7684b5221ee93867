#include "mts/servo.hpp"

#include <cmath>
#include <stdexcept>

#include "mts/json_support.hpp"

namespace mts {

void ServoConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw std::invalid_argument("servo step_size must be > 0");
  if (max_steps < 1) throw std::invalid_argument("servo max_steps must be >= 1");
  if (!(grad_stop_threshold >= 0.0)) throw std::invalid_argument("servo grad_stop_threshold must be >= 0");
  if (!(grad_threshold_unit_scale > 0.0)) throw std::invalid_argument("servo grad_threshold_unit_scale must be > 0");
  if (!(fruit_stop_fraction >= 0.0 && fruit_stop_fraction <= 1.0))
    throw std::invalid_argument("servo fruit_stop_fraction must lie in [0, 1]");
}

void to_json(nlohmann::json& j, const ServoConfig& c) {
  j = {{"step_size_m", c.step_size},
       {"grad_stop_threshold", c.grad_stop_threshold},
       {"grad_threshold_unit_scale", c.grad_threshold_unit_scale},
       {"fruit_stop_fraction", c.fruit_stop_fraction},
       {"max_steps", c.max_steps}};
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::GradientSmall: return "GradientSmall";
    case Termination::FruitLarge: return "FruitLarge";
    case Termination::MaxSteps: return "MaxSteps";
  }
  return "MaxSteps";
}

Termination termination_from_string(std::string_view name) {
  if (name == "GradientSmall") return Termination::GradientSmall;
  if (name == "FruitLarge") return Termination::FruitLarge;
  if (name == "MaxSteps") return Termination::MaxSteps;
  throw std::invalid_argument("unknown termination '" + std::string(name) + "'");
}

Observation observe(const SceneInstance& scene, const Pose& camera, const CameraIntrinsics& intrinsics) {
  Observation obs;
  obs.labels = render_labels(scene, camera, intrinsics);
  obs.fruit_fraction = fruit_fraction(obs.labels);
  obs.centroid = fruit_centroid(obs.labels);
  return obs;
}

SceneEnvironment::SceneEnvironment(SceneInstance scene, CameraIntrinsics intrinsics, ObjectiveWeights weights)
    : scene_(std::move(scene)), intrinsics_(intrinsics), weights_(weights) {
  intrinsics_.validate();
  weights_.validate();
}

Observation SceneEnvironment::observe(const Pose& camera) {
  ++render_calls_;
  return mts::observe(scene_, camera, intrinsics_);
}

double SceneEnvironment::objective(const Pose& camera) {
  ++render_calls_;
  return weights_.combine(fruit_fraction(render_labels(scene_, camera, intrinsics_)));
}

ArrayGradientSource::ArrayGradientSource(CameraArraySpec spec) : spec_(spec) {
  spec_.validate();
  offsets_ = array_offsets(spec_);
}

GradientEstimate ArrayGradientSource::estimate(const ServoState& state, ServoEnvironment& env) {
  // The reference camera's objective is the already-rendered state image; the
  // mobility term is zero so f_ref is the fruit fraction itself.
  std::vector<double> f_peripheral;
  f_peripheral.reserve(offsets_.size());
  for (const Vec3& offset : offsets_) f_peripheral.push_back(env.objective({state.pose.to_world(offset), state.pose.orientation}));
  return estimate_gradient(state.p, f_peripheral, offsets_);
}

Pose orientation_update(const Pose& pose, const std::optional<PixelCoord>& centroid, const CameraIntrinsics& intrinsics) {
  if (!centroid) return pose;
  const Vec3 ray = intrinsics.ray(centroid->u, centroid->v);
  if (ray.x == 0.0 && ray.y == 0.0) return pose;
  return {pose.position, look_along(pose.orientation.rotate(ray))};
}

Vec3 step_displacement(const Pose& pose, const GradientEstimate& g, double step_size) {
  const double mag = g.magnitude();
  if (!(mag > 0.0)) return {};
  return pose.orientation.rotate(g.g * (step_size / mag));
}

std::optional<Termination> check_termination(const ServoState& state, const GradientEstimate& g, const ServoConfig& config) {
  if (state.p > config.fruit_stop_fraction) return Termination::FruitLarge;
  if (config.grad_threshold_unit_scale * g.magnitude() < config.grad_stop_threshold) return Termination::GradientSmall;
  if (state.k >= config.max_steps) return Termination::MaxSteps;
  return std::nullopt;
}

StepResult servo_step(const ServoState& state, const GradientEstimate& g, const ServoConfig& config,
                      ServoEnvironment& env, const CameraIntrinsics& intrinsics) {
  StepResult out{state, check_termination(state, g, config)};
  out.state.last_gradient = g;
  if (out.termination) return out;

  Pose moved{state.pose.position + step_displacement(state.pose, g, config.step_size), state.pose.orientation};
  moved = orientation_update(moved, state.centroid, intrinsics);

  Observation obs = env.observe(moved);
  out.state.k = state.k + 1;
  out.state.pose = moved;
  out.state.p = obs.fruit_fraction;
  out.state.centroid = obs.centroid;
  out.state.labels = std::move(obs.labels);
  return out;
}

TrajectoryRecord run_servo(ServoEnvironment& env, GradientSource& source, const Pose& start,
                           const ServoConfig& config, const CameraIntrinsics& intrinsics) {
  config.validate();
  TrajectoryRecord record;

  Observation obs = env.observe(start);
  ServoState state;
  state.pose = start;
  state.p = obs.fruit_fraction;
  state.centroid = obs.centroid;
  state.labels = std::move(obs.labels);

  for (;;) {
    const GradientEstimate g = source.estimate(state, env);
    if (!g.g.finite()) throw std::runtime_error("servo: non-finite gradient estimate");
    record.steps.push_back({state.pose, state.p, g, state.labels});
    StepResult next = servo_step(state, g, config, env, intrinsics);
    if (next.termination) {
      record.termination = *next.termination;
      break;
    }
    state = std::move(next.state);
  }
  record.render_calls = env.render_calls();
  return record;
}

ControllerSettings ControllerSettings::from_scenario(const ScenarioConfig& scenario) {
  ControllerSettings s;
  s.array.radius = scenario.camera_array_radius;
  s.weights = {scenario.pixel_weight, scenario.mobility_weight};
  return s;
}

void to_json(nlohmann::json& j, const ControllerSettings& s) {
  j = {{"servo", s.servo},
       {"camera_array", {{"radius_m", s.array.radius},
                         {"peripheral_count", s.array.peripheral_count},
                         {"polar_angle_rad", s.array.polar_angle}}},
       {"objective_weights", {{"w1", s.weights.w1}, {"w2", s.weights.w2}}},
       {"intrinsics", {{"width", s.intrinsics.width}, {"height", s.intrinsics.height}, {"hfov_rad", s.intrinsics.hfov}}}};
}

TrajectoryRecord run_baseline(const SceneInstance& scene, const Pose& start, const ControllerSettings& settings) {
  SceneEnvironment env(scene, settings.intrinsics, settings.weights);
  ArrayGradientSource source(settings.array);
  TrajectoryRecord record = run_servo(env, source, start, settings.servo, settings.intrinsics);
  record.controller = "baseline";
  record.scene = scene;
  return record;
}

TrajectoryRecord run_baseline(const SceneInstance& scene, const ScenarioConfig& scenario,
                              const ControllerSettings& settings, const Vec3& start_offset) {
  return run_baseline(scene, start_pose(scenario, start_offset), settings);
}

}  // namespace mts
