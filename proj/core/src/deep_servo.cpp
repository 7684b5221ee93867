#include "mts/deep_servo.hpp"

namespace mts {

GradientEstimate predict_gradient(nn::Model& model, const ColorImage& image) {
  const nn::Tensor batch({1, 3, image.height, image.width}, image.values);
  const nn::Tensor out = model.forward(batch);
  if (out.size() != 3) throw nn::ShapeError("predict_gradient: model does not output 3 values");
  return {{out[0], out[1], out[2]}, 0.0};
}

CnnGradientSource::CnnGradientSource(nn::Model model, int downsample_factor)
    : model_(std::move(model)), factor_(downsample_factor) {}

GradientEstimate CnnGradientSource::estimate(const ServoState& state, ServoEnvironment&) {
  return predict_gradient(model_, downsample(to_color(state.labels), factor_));
}

TrajectoryRecord run_deep(const SceneInstance& scene, const nn::Model& model, const Pose& start,
                          const ControllerSettings& settings, int downsample_factor) {
  SceneEnvironment env(scene, settings.intrinsics, settings.weights);
  CnnGradientSource source(model, downsample_factor);
  TrajectoryRecord record = run_servo(env, source, start, settings.servo, settings.intrinsics);
  record.controller = "deep";
  record.scene = scene;
  return record;
}

TrajectoryRecord run_deep(const SceneInstance& scene, const nn::Model& model, const ScenarioConfig& scenario,
                          const ControllerSettings& settings, const Vec3& start_offset) {
  return run_deep(scene, model, start_pose(scenario, start_offset), settings);
}

}  // namespace mts
