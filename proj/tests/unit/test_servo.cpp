#include <cmath>

#include <gtest/gtest.h>

#include "mts/servo.hpp"
#include "mts/trajectory_io.hpp"
#include "oracles.hpp"

namespace mts {
namespace {

// Environment over a synthetic position field; nothing is rendered.
class FieldEnvironment final : public ServoEnvironment {
 public:
  explicit FieldEnvironment(std::function<double(const Vec3&)> f) : f_(std::move(f)) {}
  Observation observe(const Pose&) override {
    ++calls_;
    return {};
  }
  double objective(const Pose& camera) override {
    ++calls_;
    return f_(camera.position);
  }
  std::size_t render_calls() const override { return calls_; }

 private:
  std::function<double(const Vec3&)> f_;
  std::size_t calls_ = 0;
};

// Array estimate whose reference value also comes from the field.
class FieldGradientSource final : public GradientSource {
 public:
  FieldGradientSource(CameraArraySpec spec, std::function<double(const Vec3&)> f) : spec_(spec), f_(std::move(f)) {}
  GradientEstimate estimate(const ServoState& s, ServoEnvironment&) override {
    const ArrayMeasurement m = evaluate_objective_array([&](const Pose& p) { return f_(p.position); }, s.pose, spec_);
    const auto offsets = array_offsets(spec_);
    return estimate_gradient(m.f_ref, m.f_peripheral, offsets);
  }

 private:
  CameraArraySpec spec_;
  std::function<double(const Vec3&)> f_;
};

ServoState state_with(double p, int k = 0) {
  ServoState s;
  s.p = p;
  s.k = k;
  return s;
}

TEST(CheckTermination, Priorities) {
  ServoConfig c;
  c.grad_threshold_unit_scale = 1.0;
  EXPECT_EQ(check_termination(state_with(0.1), {{1.2, 0, 0}, 0}, c), Termination::GradientSmall);
  EXPECT_EQ(check_termination(state_with(0.41), {{5, 0, 0}, 0}, c), Termination::FruitLarge);
  EXPECT_EQ(check_termination(state_with(0.41), {{0, 0, 0}, 0}, c), Termination::FruitLarge);
  EXPECT_EQ(check_termination(state_with(0.1, 200), {{5, 0, 0}, 0}, c), Termination::MaxSteps);
  EXPECT_EQ(check_termination(state_with(0.1, 199), {{5, 0, 0}, 0}, c), std::nullopt);
  EXPECT_EQ(check_termination(state_with(0.40), {{5, 0, 0}, 0}, c), std::nullopt);
}

TEST(CheckTermination, DefaultUnitScaleReadsPercent) {
  const ServoConfig c;
  EXPECT_EQ(check_termination(state_with(0.1), {{0.014, 0, 0}, 0}, c), Termination::GradientSmall);
  EXPECT_EQ(check_termination(state_with(0.1), {{0.016, 0, 0}, 0}, c), std::nullopt);
}

TEST(ServoConfig, Validation) {
  ServoConfig c;
  c.step_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.fruit_stop_fraction = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Termination, StringRoundTrip) {
  for (Termination t : {Termination::GradientSmall, Termination::FruitLarge, Termination::MaxSteps})
    EXPECT_EQ(termination_from_string(to_string(t)), t);
  EXPECT_THROW(termination_from_string("Bored"), std::invalid_argument);
}

TEST(StepDisplacement, NormalizedCameraFrameStep) {
  const Pose identity{};
  const Vec3 d = step_displacement(identity, {{0, 0, 2}, 0}, 0.01);
  EXPECT_NEAR(distance(d, {0, 0, 0.01}), 0.0, 1e-15);
  const Pose turned{{}, Rotation::from_axis_angle({0, 1, 0}, std::numbers::pi / 2)};
  EXPECT_NEAR(distance(step_displacement(turned, {{0, 0, 7}, 0}, 0.01), {0.01, 0, 0}), 0.0, 1e-15);
  EXPECT_EQ(step_displacement(identity, {}, 0.01), Vec3{});
}

TEST(ServoStep, MovesAlongGradientAndCounts) {
  FieldEnvironment env([](const Vec3&) { return 0.0; });
  ServoState s = state_with(0.1);
  ServoConfig c;
  c.grad_threshold_unit_scale = 1.0;
  const StepResult r = servo_step(s, {{0, 0, 2}, 0}, c, env, {});
  ASSERT_FALSE(r.termination);
  EXPECT_NEAR(distance(r.state.pose.position, {0, 0, 0.01}), 0.0, 1e-15);
  EXPECT_EQ(r.state.k, 1);
  EXPECT_EQ(env.render_calls(), 1u);
  const StepResult stop = servo_step(s, {{0, 0, 1.2}, 0}, c, env, {});
  EXPECT_EQ(stop.termination, Termination::GradientSmall);
  EXPECT_EQ(stop.state.pose, s.pose);
}

TEST(OrientationUpdate, UnchangedCases) {
  const Pose p = look_at({0, 0, 0}, {1, 0.2, 0.1});
  const CameraIntrinsics in;
  EXPECT_EQ(orientation_update(p, std::nullopt, in), p);
  EXPECT_EQ(orientation_update(p, PixelCoord{31.5, 31.5}, in), p);
}

TEST(OrientationUpdate, OffCentreCentroidIsRecentred) {
  const CameraIntrinsics in;
  const Pose pose = look_at({0, 0, 0}, {1, 0, 0});
  SceneInstance s;
  s.has_leaf = false;
  s.fruit_radius = 0.02;
  s.fruit_center = 0.5 * normalized(pose.orientation * in.ray(48, 32));
  const auto before = fruit_centroid(render_labels(s, pose, in));
  ASSERT_TRUE(before);
  EXPECT_NEAR(before->u, 48, 1.0);
  EXPECT_NEAR(before->v, 32, 1.0);

  const Pose updated = orientation_update(pose, before, in);
  EXPECT_EQ(updated.position, pose.position);
  const double angle = std::acos(std::clamp(dot(updated.optical_axis(), pose.optical_axis()), -1.0, 1.0));
  const Vec3 ray = in.ray(before->u, before->v);
  EXPECT_NEAR(angle, std::atan(std::hypot(ray.x, ray.y)), 1e-9);
  EXPECT_NEAR(angle, std::atan(16.0 / in.focal_px()), 0.03);

  const auto after = fruit_centroid(render_labels(s, updated, in));
  ASSERT_TRUE(after);
  EXPECT_NEAR(after->u, 31.5, 1.0);
  EXPECT_NEAR(after->v, 31.5, 1.0);
}

TEST(RunServo, ConcaveFieldApproachesMaximum) {
  const Vec3 star{0.4, 0.6, 0.7};
  const auto field = [&](const Vec3& x) { return -dot(x - star, x - star); };
  // A small array keeps the curvature bias of the fit well below a step.
  const CameraArraySpec spec{0.005, 8, CameraArraySpec{}.polar_angle};
  FieldEnvironment env(field);
  FieldGradientSource source(spec, field);
  const ServoConfig config;
  const TrajectoryRecord r = run_servo(env, source, look_at({0.04, 0.59, 0.68}, star), config, {});
  EXPECT_EQ(r.termination, Termination::GradientSmall);
  double prev = std::numeric_limits<double>::infinity();
  for (const TrajectoryStep& s : r.steps) {
    const double d = distance(s.pose.position, star);
    if (prev > config.step_size) EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LE(distance(r.final_step().pose.position, star), config.step_size);
}

TEST(RunBaseline, InvariantsAndRenderCount) {
  const ScenarioConfig sc;
  const ControllerSettings settings = ControllerSettings::from_scenario(sc);
  const Pose start = start_pose(sc);
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 3; ++seed) {
    const SceneInstance scene = sample_scene(sc, seed);
    if (!is_eligible(scene, start, settings.intrinsics)) continue;
    ++checked;
    const TrajectoryRecord r = run_baseline(scene, sc, settings);
    EXPECT_EQ(r.controller, "baseline");
    EXPECT_EQ(r.scene, scene);
    ASSERT_FALSE(r.steps.empty());
    EXPECT_EQ(r.steps.front().pose, start);
    EXPECT_LE(r.guidance_steps(), settings.servo.max_steps);
    EXPECT_EQ(r.render_calls, 9 * r.steps.size());
    for (const TrajectoryStep& s : r.steps) {
      EXPECT_GE(s.p, 0.0);
      EXPECT_LE(s.p, 1.0);
      EXPECT_NEAR(s.pose.orientation.quaternion_norm(), 1.0, 1e-12);
      EXPECT_EQ(s.labels.labels.size(), settings.intrinsics.pixel_count());
      EXPECT_EQ(s.p, fruit_fraction(s.labels));
    }
    const TrajectoryStep& last = r.final_step();
    if (r.termination == Termination::FruitLarge) EXPECT_GT(last.p, settings.servo.fruit_stop_fraction);
    if (r.termination == Termination::GradientSmall)
      EXPECT_LT(settings.servo.grad_threshold_unit_scale * last.gradient.magnitude(), settings.servo.grad_stop_threshold);
    EXPECT_NE(r.termination, Termination::MaxSteps);
    EXPECT_GE(last.p, 10 * r.steps.front().p);
  }
}

TEST(RunBaseline, Deterministic) {
  const ScenarioConfig sc;
  const ControllerSettings settings = ControllerSettings::from_scenario(sc);
  const SceneInstance scene = sample_scene(sc, 2);
  const TrajectoryRecord a = run_baseline(scene, sc, settings), b = run_baseline(scene, sc, settings);
  EXPECT_EQ(trajectory_to_json(a).dump(), trajectory_to_json(b).dump());
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].labels, b.steps[i].labels);
}

TEST(RunBaseline, UnoccludedApproachStepCount) {
  // Stop distance where a centred sphere covers the stop fraction of the
  // image: pi * (f tan(asin(R / d)))^2 = fraction * W * H.
  const ScenarioConfig sc;
  const ControllerSettings settings = ControllerSettings::from_scenario(sc);
  const SceneInstance clear = sample_scene(sc, 1).without_leaf();
  const CameraIntrinsics& in = settings.intrinsics;
  const double r_px = std::sqrt(settings.servo.fruit_stop_fraction * in.pixel_count() / std::numbers::pi);
  const double d_stop = clear.fruit_radius / std::sin(std::atan(r_px / in.focal_px()));
  const double d0 = distance(sc.initial_ee_position, sc.fruit_position);
  const double expected = (d0 - d_stop) / settings.servo.step_size;
  const TrajectoryRecord r = run_baseline(clear, sc, settings);
  EXPECT_EQ(r.termination, Termination::FruitLarge);
  EXPECT_NEAR(r.guidance_steps(), expected, 2.0);
}

TEST(TrajectoryJson, RoundTrip) {
  const ScenarioConfig sc;
  const ControllerSettings settings = ControllerSettings::from_scenario(sc);
  const TrajectoryRecord r = run_baseline(sample_scene(sc, 2), sc, settings);
  const nlohmann::json j = trajectory_to_json(r);
  EXPECT_EQ(j.at("controller"), "baseline");
  EXPECT_EQ(j.at("steps").size(), r.steps.size());
  const TrajectoryRecord back = trajectory_from_json(j);
  EXPECT_EQ(back.termination, r.termination);
  EXPECT_EQ(back.scene, r.scene);
  ASSERT_EQ(back.steps.size(), r.steps.size());
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].pose.position, r.steps[i].pose.position);
    EXPECT_EQ(back.steps[i].p, r.steps[i].p);
    EXPECT_EQ(back.steps[i].gradient, r.steps[i].gradient);
  }
  EXPECT_EQ(trajectory_to_json(back).dump(), j.dump());
}

}  // namespace
}  // namespace mts
