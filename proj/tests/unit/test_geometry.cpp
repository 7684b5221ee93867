#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mts/geometry.hpp"
#include "mts/json_support.hpp"
#include "test_support.hpp"

namespace mts {
namespace {

using testing::random_rotation;
using testing::random_unit;
using testing::random_vec;

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

TEST(Vec3, BasicAlgebra) {
  constexpr Vec3 a{1, 2, 3}, b{-2, 0.5, 4};
  static_assert(dot(a, b) == 11.0);
  EXPECT_EQ(cross(a, b), Vec3(2 * 4 - 3 * 0.5, 3 * -2 - 1 * 4, 1 * 0.5 - 2 * -2));
  EXPECT_DOUBLE_EQ(norm(Vec3{3, 4, 0}), 5.0);
  EXPECT_EQ(normalized(Vec3{}), Vec3{});
  EXPECT_DOUBLE_EQ(distance(a, b), norm(a - b));
}

TEST(Rotation, QuaternionIsNormalizedAndCanonical) {
  const Rotation r = Rotation::from_quaternion(-2.0, 0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(r.w(), 1.0);
  EXPECT_DOUBLE_EQ(r.quaternion_norm(), 1.0);
}

TEST(Rotation, AxisAngleQuarterTurn) {
  const Rotation r = Rotation::from_axis_angle({0, 0, 1}, std::numbers::pi / 2);
  expect_near(r * Vec3{1, 0, 0}, {0, 1, 0}, 1e-15);
  expect_near(r * Vec3{0, 1, 0}, {-1, 0, 0}, 1e-15);
}

TEST(Rotation, MatrixIsOrthonormalAndRoundTrips) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Rotation r = random_rotation(rng);
    const auto m = r.matrix();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += m[k][a] * m[k][b];
        EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-12);
      }
    const Rotation back = Rotation::from_matrix(m);
    const Vec3 v = random_vec(rng, -1, 1);
    expect_near(back * v, r * v, 1e-12);
    EXPECT_NEAR(back.quaternion_norm(), 1.0, 1e-14);
    EXPECT_GE(back.w(), 0.0);
  }
}

TEST(Rotation, CompositionAndInverse) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Rotation a = random_rotation(rng), b = random_rotation(rng);
    const Vec3 v = random_vec(rng, -2, 2);
    expect_near((a * b) * v, a * (b * v), 1e-12);
    expect_near(a.inverse() * (a * v), v, 1e-12);
    EXPECT_NEAR(norm(a * v), norm(v), 1e-12);
  }
}

TEST(Rotation, BetweenMapsDirections) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_unit(rng), b = random_unit(rng);
    expect_near(Rotation::between(a, b) * a, b, 1e-12);
  }
  const Vec3 a{0, 0, 1};
  expect_near(Rotation::between(a, -a) * a, -a, 1e-12);
}

TEST(Pose, WorldCameraRoundTrip) {
  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    const Pose p{random_vec(rng, -1, 1), random_rotation(rng)};
    const Vec3 w = random_vec(rng, -3, 3);
    expect_near(p.to_world(p.to_camera(w)), w, 1e-12);
  }
}

TEST(LookAt, OpticalAxisHitsTargetAndImageStaysUpright) {
  Rng rng(15);
  for (int i = 0; i < 200; ++i) {
    const Vec3 eye = random_vec(rng, -1, 1), target = random_vec(rng, -1, 1);
    if (distance(eye, target) < 0.05) continue;
    const Pose p = look_at(eye, target);
    expect_near(p.optical_axis(), normalized(target - eye), 1e-12);
    // Image x (right) is horizontal; image y (down) points against world up.
    const Vec3 right = p.orientation * Vec3{1, 0, 0};
    const Vec3 down = p.orientation * Vec3{0, 1, 0};
    EXPECT_NEAR(right.z, 0.0, 1e-12);
    EXPECT_LE(down.z, 1e-12);
    // Right-handed camera frame.
    expect_near(cross(right, down), p.optical_axis(), 1e-12);
  }
}

TEST(LookAt, StraightDownIsStillValid) {
  const Pose p = look_at({0, 0, 1}, {0, 0, 0});
  expect_near(p.optical_axis(), {0, 0, -1}, 1e-12);
  EXPECT_NEAR(p.orientation.quaternion_norm(), 1.0, 1e-14);
}

TEST(GeometryJson, RoundTrip) {
  Rng rng(16);
  const Pose p{random_vec(rng, -1, 1), random_rotation(rng)};
  const nlohmann::json j = p;
  const Pose back = j.get<Pose>();
  EXPECT_EQ(back.position, p.position);
  expect_near(back.orientation * Vec3{1, 2, 3}, p.orientation * Vec3{1, 2, 3}, 1e-15);
  EXPECT_EQ(j.at("orientation").size(), 4u);
}

}  // namespace
}  // namespace mts
