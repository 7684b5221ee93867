#pragma once

#include "mts/dataset.hpp"
#include "mts/nn/model.hpp"
#include "mts/servo.hpp"

namespace mts {

/// Regressor output for one image of the model's input size. residual_norm
/// is 0, there being no fit. Throws nn::ShapeError on a size mismatch.
GradientEstimate predict_gradient(nn::Model& model, const ColorImage& image);

/// Single-camera gradient: colors the state's reference labels, block-averages
/// them to the model input and runs the regressor. Renders nothing.
class CnnGradientSource final : public GradientSource {
 public:
  explicit CnnGradientSource(nn::Model model, int downsample_factor = kDefaultDownsample);
  GradientEstimate estimate(const ServoState& state, ServoEnvironment& env) override;

 private:
  nn::Model model_;
  int factor_;
};

/// Learned-gradient controller from an explicit start pose.
TrajectoryRecord run_deep(const SceneInstance& scene, const nn::Model& model, const Pose& start,
                          const ControllerSettings& settings, int downsample_factor = kDefaultDownsample);

/// Learned-gradient controller from the scenario start, shifted by `start_offset`.
TrajectoryRecord run_deep(const SceneInstance& scene, const nn::Model& model, const ScenarioConfig& scenario,
                          const ControllerSettings& settings, const Vec3& start_offset = {});

}  // namespace mts
