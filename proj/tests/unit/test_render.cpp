#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mts/render.hpp"
#include "mts/scene.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace mts {
namespace {

using testing::random_unit;

TEST(Intrinsics, FocalLengthAndCenterRay) {
  const CameraIntrinsics in;
  EXPECT_NEAR(in.focal_px(), 32.0 / std::tan(std::numbers::pi / 6), 1e-12);
  const Vec3 r = in.ray(31.5, 31.5);
  EXPECT_NEAR(r.x, 0.0, 1e-15);
  EXPECT_NEAR(r.y, 0.0, 1e-15);
  // Left edge of pixel 0 sits at the half field of view.
  EXPECT_NEAR(std::atan(-in.ray(-0.5, 0).x), std::numbers::pi / 6, 1e-12);
}

TEST(Intrinsics, Validation) {
  CameraIntrinsics in;
  in.width = 4;
  EXPECT_THROW(in.validate(), std::invalid_argument);
  in = {};
  in.hfov = 0.0;
  EXPECT_THROW(in.validate(), std::invalid_argument);
}

TEST(TraceRay, SphereAndDiscOrdering) {
  SceneInstance s;
  s.fruit_center = {1, 0, 0};
  s.fruit_radius = 0.1;
  s.leaf_center = {0.5, 0, 0};
  EXPECT_EQ(trace_ray(s, {0, 0, 0}, {1, 0, 0}), Label::Leaf);
  EXPECT_EQ(trace_ray(s.without_leaf(), {0, 0, 0}, {1, 0, 0}), Label::Fruit);
  EXPECT_EQ(trace_ray(s, {0, 0, 0}, {-1, 0, 0}), Label::Background);
  // Past the leaf edge (half width 0.06 along y) but inside the fruit silhouette.
  EXPECT_EQ(trace_ray(s, {0, 0.065, 0}, {1, 0, 0}), Label::Fruit);
  // Camera between leaf and fruit sees the fruit.
  EXPECT_EQ(trace_ray(s, {0.7, 0, 0}, {1, 0, 0}), Label::Fruit);
}

TEST(Render, CentredSphereMatchesAnalyticDisc) {
  SceneInstance s;
  s.has_leaf = false;
  s.fruit_center = {0, 0, 0.3};
  const Pose cam{};
  const CameraIntrinsics in;
  const LabelImage img = render_labels(s, cam, in);
  // Angular radius asin(r/d) projected: radius_px = f * tan(asin(r / d)).
  const double rpx = in.focal_px() * std::tan(std::asin(s.fruit_radius / 0.3));
  EXPECT_NEAR(fruit_fraction(img), std::numbers::pi * rpx * rpx / in.pixel_count(), 0.01);
  const auto c = fruit_centroid(img);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->u, 31.5, 1e-12);
  EXPECT_NEAR(c->v, 31.5, 1e-12);
}

TEST(Render, FractionMatchesSupersampledReference) {
  Rng rng(21);
  const SceneInstance clear = sample_scene({}, 1).without_leaf();
  const CameraIntrinsics in;
  for (int i = 0; i < 10; ++i) {
    const Vec3 dir = random_unit(rng);
    const Vec3 eye = clear.fruit_center + rng.uniform(0.1, 0.5) * dir;
    const Vec3 aim = clear.fruit_center + testing::random_vec(rng, -0.08, 0.08);
    const Pose pose = look_at(eye, aim);
    EXPECT_NEAR(fruit_fraction(render_labels(clear, pose, in)), oracle::supersampled_fraction(clear, pose, in, 8), 0.02);
  }
}

TEST(Render, LeafOnlyRemovesFruitPixels) {
  const ScenarioConfig c;
  const Pose start = start_pose(c);
  const CameraIntrinsics in;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneInstance s = sample_scene(c, seed);
    const LabelImage with = render_labels(s, start, in), without = render_labels(s.without_leaf(), start, in);
    for (std::size_t k = 0; k < with.labels.size(); ++k)
      if (with.labels[k] == Label::Fruit) EXPECT_EQ(without.labels[k], Label::Fruit);
    EXPECT_LE(fruit_fraction(with), fruit_fraction(without));
  }
}

TEST(Render, NoFruitInViewGivesNoCentroid) {
  SceneInstance s;
  s.fruit_center = {0, 0, -1};
  const LabelImage img = render_labels(s, Pose{}, {});
  EXPECT_EQ(fruit_fraction(img), 0.0);
  EXPECT_FALSE(fruit_centroid(img));
}

TEST(ColorImage, LabelColorsAndDownsample) {
  LabelImage l(4, 2);
  l.at(0, 0) = Label::Fruit;
  l.at(1, 0) = Label::Fruit;
  l.at(2, 1) = Label::Leaf;
  const ColorImage c = to_color(l);
  EXPECT_EQ(c.at(0, 0, 0), 1.0f);
  EXPECT_EQ(c.at(1, 0, 0), 0.0f);
  EXPECT_EQ(c.at(1, 2, 1), 1.0f);
  const ColorImage d = downsample(c, 2);
  ASSERT_EQ(d.width, 2);
  ASSERT_EQ(d.height, 1);
  EXPECT_FLOAT_EQ(d.at(0, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(d.at(1, 1, 0), 0.25f);
  EXPECT_EQ(downsample(c, 1), c);
  EXPECT_THROW(downsample(c, 3), std::invalid_argument);
}

TEST(Ppm, HeaderAndRounding) {
  ColorImage img(2, 1);
  img.at(0, 0, 0) = 1.0f;
  img.at(1, 1, 0) = 0.5f;
  const auto bytes = encode_ppm(img, "hello");
  const std::string header = "P6\n# hello\n2 1\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())), header);
  const std::vector<std::uint8_t> px(bytes.end() - 6, bytes.end());
  EXPECT_EQ(px, (std::vector<std::uint8_t>{255, 0, 0, 0, 128, 0}));
  EXPECT_THROW(encode_ppm(img, "two\nlines"), std::invalid_argument);
}

}  // namespace
}  // namespace mts
