#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mts/baseline.hpp"
#include "mts/geometry.hpp"
#include "mts/render.hpp"
#include "mts/scene.hpp"

namespace mts {

struct ServoConfig {
  double step_size = 0.01;  // m per control step
  /// Stop when grad_threshold_unit_scale * |g| falls below this value.
  double grad_stop_threshold = 1.5;
  /// Converts |g| (fruit fraction per meter) into the threshold's units. The
  /// default of 100 reads the threshold as percent of the image per meter.
  double grad_threshold_unit_scale = 100.0;
  double fruit_stop_fraction = 0.40;
  int max_steps = 200;

  void validate() const;
};

void to_json(nlohmann::json& j, const ServoConfig& c);

enum class Termination { GradientSmall, FruitLarge, MaxSteps };

std::string_view to_string(Termination t);
/// Throws std::invalid_argument for unknown names.
Termination termination_from_string(std::string_view name);

/// What the reference camera sees at one pose.
struct Observation {
  LabelImage labels;
  double fruit_fraction = 0.0;
  std::optional<PixelCoord> centroid;
};

Observation observe(const SceneInstance& scene, const Pose& camera, const CameraIntrinsics& intrinsics);

struct ServoState {
  int k = 0;
  Pose pose;
  double p = 0.0;
  std::optional<PixelCoord> centroid;
  GradientEstimate last_gradient;
  LabelImage labels;  // reference image behind p and centroid
};

/// One recorded control step: the measurement at `pose` and the gradient
/// computed from it. The reference color image is to_color(labels).
struct TrajectoryStep {
  Pose pose;
  double p = 0.0;
  GradientEstimate gradient;
  LabelImage labels;
};

struct TrajectoryRecord {
  std::string controller;  // "baseline" or "deep"
  SceneInstance scene;
  std::vector<TrajectoryStep> steps;
  Termination termination = Termination::MaxSteps;
  std::size_t render_calls = 0;

  /// Number of position updates (the last record is the terminating measurement).
  int guidance_steps() const { return steps.empty() ? 0 : static_cast<int>(steps.size()) - 1; }
  const TrajectoryStep& final_step() const { return steps.back(); }
};

/// Source of reference-camera observations. Implementations count renders so
/// controllers can be compared by sensing cost.
class ServoEnvironment {
 public:
  virtual ~ServoEnvironment() = default;
  virtual Observation observe(const Pose& camera) = 0;
  /// Objective value at a pose without keeping the image (peripheral cameras).
  virtual double objective(const Pose& camera) = 0;
  virtual std::size_t render_calls() const = 0;
};

/// Renders a fixed scene with the label renderer.
class SceneEnvironment final : public ServoEnvironment {
 public:
  SceneEnvironment(SceneInstance scene, CameraIntrinsics intrinsics, ObjectiveWeights weights = {});

  Observation observe(const Pose& camera) override;
  double objective(const Pose& camera) override;
  std::size_t render_calls() const override { return render_calls_; }

  const SceneInstance& scene() const { return scene_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }

 private:
  SceneInstance scene_;
  CameraIntrinsics intrinsics_;
  ObjectiveWeights weights_;
  std::size_t render_calls_ = 0;
};

/// Produces the direction gradient for the current state.
class GradientSource {
 public:
  virtual ~GradientSource() = default;
  virtual GradientEstimate estimate(const ServoState& state, ServoEnvironment& env) = 0;
};

/// Multi-camera estimate: probes the environment at each peripheral pose.
class ArrayGradientSource final : public GradientSource {
 public:
  explicit ArrayGradientSource(CameraArraySpec spec);
  GradientEstimate estimate(const ServoState& state, ServoEnvironment& env) override;

 private:
  CameraArraySpec spec_;
  std::vector<Vec3> offsets_;
};

/// Re-aims the camera so the ray through `centroid` becomes the optical axis,
/// keeping the image upright with respect to world vertical. Position is
/// unchanged; so is the pose when the centroid is absent or already centered.
Pose orientation_update(const Pose& pose, const std::optional<PixelCoord>& centroid, const CameraIntrinsics& intrinsics);

/// Camera-frame gradient turned into the world-frame position increment of
/// one step (zero for a zero gradient).
Vec3 step_displacement(const Pose& pose, const GradientEstimate& g, double step_size);

/// Termination test for the measurement in `state` (checked before moving).
/// FruitLarge takes precedence over GradientSmall, which precedes MaxSteps.
std::optional<Termination> check_termination(const ServoState& state, const GradientEstimate& g, const ServoConfig& config);

struct StepResult {
  ServoState state;
  std::optional<Termination> termination;
};

/// One control iteration: terminate, or move along the normalized gradient,
/// re-aim at the last fruit centroid, and observe the new pose.
StepResult servo_step(const ServoState& state, const GradientEstimate& g, const ServoConfig& config,
                      ServoEnvironment& env, const CameraIntrinsics& intrinsics);

/// Observe the start pose, then alternate gradient estimation and servo_step
/// until termination, recording every measurement.
TrajectoryRecord run_servo(ServoEnvironment& env, GradientSource& source, const Pose& start,
                           const ServoConfig& config, const CameraIntrinsics& intrinsics);

/// Everything a controller needs besides the scene and start pose.
struct ControllerSettings {
  ServoConfig servo;
  CameraArraySpec array;
  ObjectiveWeights weights;
  CameraIntrinsics intrinsics;

  static ControllerSettings from_scenario(const ScenarioConfig& scenario);
};

void to_json(nlohmann::json& j, const ControllerSettings& s);

/// Multi-camera controller from an explicit start pose.
TrajectoryRecord run_baseline(const SceneInstance& scene, const Pose& start, const ControllerSettings& settings);

/// Multi-camera controller from the scenario start, shifted by `start_offset`.
TrajectoryRecord run_baseline(const SceneInstance& scene, const ScenarioConfig& scenario,
                              const ControllerSettings& settings, const Vec3& start_offset = {});

}  // namespace mts
