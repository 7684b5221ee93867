#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mts/geometry.hpp"
#include "mts/scene.hpp"

namespace mts {

/// Pinhole camera with square pixels; the vertical field of view follows from
/// the aspect ratio.
struct CameraIntrinsics {
  int width = 64;
  int height = 64;
  double hfov = 1.0471975511965976;  // 60 degrees

  /// Throws std::invalid_argument unless width, height >= 8 and 0 < hfov < pi.
  void validate() const;
  double focal_px() const;
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  /// Camera-frame ray (unnormalized, z = 1) through continuous pixel
  /// coordinates; pixel (u, v) has its center at (u + 0.5, v + 0.5).
  Vec3 ray(double u, double v) const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

enum class Label : std::uint8_t { Background = 0, Fruit = 1, Leaf = 2 };

/// Row-major per-pixel class map.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<Label> labels;

  LabelImage() = default;
  LabelImage(int w, int h, Label fill = Label::Background)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  Label at(int u, int v) const { return labels[static_cast<std::size_t>(v) * width + u]; }
  Label& at(int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; }

  friend bool operator==(const LabelImage&, const LabelImage&) = default;
};

/// Channel-major RGB image with values in [0, 1].
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // 3 * height * width

  ColorImage() = default;
  ColorImage(int w, int h) : width(w), height(h), values(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f) {}

  float at(int c, int u, int v) const { return values[(static_cast<std::size_t>(c) * height + v) * width + u]; }
  float& at(int c, int u, int v) { return values[(static_cast<std::size_t>(c) * height + v) * width + u]; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Closest intersection along a world-space ray. Leaf wins ties.
Label trace_ray(const SceneInstance& scene, const Vec3& origin, const Vec3& direction);

/// One ray through each pixel center.
LabelImage render_labels(const SceneInstance& scene, const Pose& camera, const CameraIntrinsics& intrinsics);

double fruit_fraction(const LabelImage& image);

/// Mean pixel index of Fruit pixels, or nullopt when there are none.
std::optional<PixelCoord> fruit_centroid(const LabelImage& image);

/// Fruit -> red, Leaf -> green, Background -> black.
ColorImage to_color(const LabelImage& image);

ColorImage render_color(const SceneInstance& scene, const Pose& camera, const CameraIntrinsics& intrinsics);

/// Block-average downsampling by an integer factor that divides both sides.
ColorImage downsample(const ColorImage& image, int factor);

/// Fruit fraction seen from `camera`, as used by the eligibility filter.
FractionFn fraction_fn(const CameraIntrinsics& intrinsics);

bool is_eligible(const SceneInstance& scene, const Pose& start, const CameraIntrinsics& intrinsics,
                 const EligibilityThresholds& thresholds = {});

/// Binary PPM (P6, maxval 255), channels rounded half-up.
/// `comment` (single line) goes into the header as a '#' comment.
void write_ppm(const ColorImage& image, const std::filesystem::path& path, const std::string& comment = {});
std::vector<std::uint8_t> encode_ppm(const ColorImage& image, const std::string& comment = {});

}  // namespace mts
