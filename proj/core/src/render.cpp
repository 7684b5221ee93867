#include "mts/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mts {

namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

double intersect_sphere(const Vec3& origin, const Vec3& dir, const Vec3& center, double radius) {
  const Vec3 oc = origin - center;
  const double a = dot(dir, dir);
  const double half_b = dot(dir, oc);
  const double c = dot(oc, oc) - radius * radius;
  const double disc = half_b * half_b - a * c;
  if (disc < 0.0) return kNoHit;
  const double root = std::sqrt(disc);
  const double near = (-half_b - root) / a;
  if (near > 0.0) return near;
  const double far = (-half_b + root) / a;
  return far > 0.0 ? far : kNoHit;
}

double intersect_leaf(const SceneInstance& s, const Vec3& origin, const Vec3& dir) {
  const Vec3 n = s.leaf_normal();
  const double denom = dot(dir, n);
  if (std::abs(denom) < 1e-300) return kNoHit;
  const double t = dot(s.leaf_center - origin, n) / denom;
  if (!(t > 0.0)) return kNoHit;
  const Vec3 q = origin + t * dir - s.leaf_center;
  const double a = dot(q, s.leaf_width_axis()) / s.leaf_half_width;
  const double b = dot(q, s.leaf_height_axis()) / s.leaf_half_height;
  return a * a + b * b <= 1.0 ? t : kNoHit;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (width < 8 || height < 8) throw std::invalid_argument("camera intrinsics: width and height must be >= 8");
  if (!(hfov > 0.0 && hfov < std::numbers::pi)) throw std::invalid_argument("camera intrinsics: hfov must lie in (0, pi)");
}

double CameraIntrinsics::focal_px() const { return 0.5 * width / std::tan(0.5 * hfov); }

Vec3 CameraIntrinsics::ray(double u, double v) const {
  const double f = focal_px();
  return {(u + 0.5 - 0.5 * width) / f, (v + 0.5 - 0.5 * height) / f, 1.0};
}

Label trace_ray(const SceneInstance& scene, const Vec3& origin, const Vec3& direction) {
  const double t_fruit = intersect_sphere(origin, direction, scene.fruit_center, scene.fruit_radius);
  const double t_leaf = scene.has_leaf ? intersect_leaf(scene, origin, direction) : kNoHit;
  if (t_leaf == kNoHit && t_fruit == kNoHit) return Label::Background;
  return t_leaf <= t_fruit ? Label::Leaf : Label::Fruit;
}

LabelImage render_labels(const SceneInstance& scene, const Pose& camera, const CameraIntrinsics& intrinsics) {
  intrinsics.validate();
  LabelImage image(intrinsics.width, intrinsics.height);
  for (int v = 0; v < intrinsics.height; ++v) {
    for (int u = 0; u < intrinsics.width; ++u) {
      const Vec3 dir = camera.orientation.rotate(intrinsics.ray(u, v));
      image.at(u, v) = trace_ray(scene, camera.position, dir);
    }
  }
  return image;
}

double fruit_fraction(const LabelImage& image) {
  if (image.labels.empty()) return 0.0;
  std::size_t count = 0;
  for (Label l : image.labels) count += l == Label::Fruit;
  return static_cast<double>(count) / static_cast<double>(image.labels.size());
}

std::optional<PixelCoord> fruit_centroid(const LabelImage& image) {
  double su = 0.0, sv = 0.0;
  std::size_t count = 0;
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      if (image.at(u, v) != Label::Fruit) continue;
      su += u;
      sv += v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return PixelCoord{su / static_cast<double>(count), sv / static_cast<double>(count)};
}

ColorImage to_color(const LabelImage& image) {
  ColorImage out(image.width, image.height);
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      switch (image.at(u, v)) {
        case Label::Fruit: out.at(0, u, v) = 1.0f; break;
        case Label::Leaf: out.at(1, u, v) = 1.0f; break;
        case Label::Background: break;
      }
    }
  }
  return out;
}

ColorImage render_color(const SceneInstance& scene, const Pose& camera, const CameraIntrinsics& intrinsics) {
  return to_color(render_labels(scene, camera, intrinsics));
}

ColorImage downsample(const ColorImage& image, int factor) {
  if (factor < 1 || image.width % factor != 0 || image.height % factor != 0)
    throw std::invalid_argument("downsample factor must divide image dimensions");
  if (factor == 1) return image;
  const int w = image.width / factor;
  const int h = image.height / factor;
  const float inv = 1.0f / static_cast<float>(factor * factor);
  ColorImage out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        float sum = 0.0f;
        for (int dv = 0; dv < factor; ++dv)
          for (int du = 0; du < factor; ++du) sum += image.at(c, u * factor + du, v * factor + dv);
        out.at(c, u, v) = sum * inv;
      }
    }
  }
  return out;
}

FractionFn fraction_fn(const CameraIntrinsics& intrinsics) {
  return [intrinsics](const SceneInstance& scene, const Pose& pose) {
    return fruit_fraction(render_labels(scene, pose, intrinsics));
  };
}

bool is_eligible(const SceneInstance& scene, const Pose& start, const CameraIntrinsics& intrinsics,
                 const EligibilityThresholds& thresholds) {
  return is_eligible(scene, start, fraction_fn(intrinsics), thresholds);
}

std::vector<std::uint8_t> encode_ppm(const ColorImage& image, const std::string& comment) {
  if (comment.find_first_of("\r\n") != std::string::npos) throw std::invalid_argument("ppm comment must be one line");
  const std::string header = "P6\n" + (comment.empty() ? std::string() : "# " + comment + "\n") + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 3 * static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height));
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      for (int c = 0; c < 3; ++c) {
        const double x = std::clamp(static_cast<double>(image.at(c, u, v)), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::floor(x * 255.0 + 0.5)));
      }
    }
  }
  return out;
}

void write_ppm(const ColorImage& image, const std::filesystem::path& path, const std::string& comment) {
  const auto bytes = encode_ppm(image, comment);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace mts
