#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mts/geometry.hpp"
#include "mts/render.hpp"
#include "mts/scene.hpp"

namespace mts {

/// Raised when camera offsets do not span three dimensions, so a 3-D gradient
/// cannot be identified from them.
class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Camera array: a reference camera at the rig origin plus `peripheral_count`
/// cameras spaced evenly in azimuth on a spherical cap of `radius`, tilted
/// `polar_angle` away from the optical axis.
struct CameraArraySpec {
  double radius = 0.07;
  int peripheral_count = 8;
  double polar_angle = 0.5235987755982988;  // 30 degrees

  /// Throws std::invalid_argument on bad values and DegenerateGeometryError
  /// when the offset directions have rank < 3.
  void validate() const;
};

/// Peripheral offsets in the camera frame; the reference camera sits at the
/// origin and is not included.
std::vector<Vec3> array_offsets(const CameraArraySpec& spec);

/// Objective f = w1 * p + w2 * m. The mobility term m is not modelled, so w2
/// must be zero and w1 one.
struct ObjectiveWeights {
  double w1 = 1.0;
  double w2 = 0.0;

  void validate() const;
  double combine(double fruit_fraction) const { return w1 * fruit_fraction; }
};

/// Objective value at a camera pose. Lets tests probe the array with
/// synthetic fields instead of renders.
using ObjectiveFn = std::function<double(const Pose&)>;

struct ArrayMeasurement {
  double f_ref = 0.0;
  std::vector<double> f_peripheral;
};

/// Peripheral cameras share the rig orientation and sit at
/// rig.position + R(rig) * offset.
ArrayMeasurement evaluate_objective_array(const ObjectiveFn& objective, const Pose& rig, const CameraArraySpec& spec);

ArrayMeasurement evaluate_objective_array(const SceneInstance& scene, const Pose& rig, const CameraArraySpec& spec,
                                          const ObjectiveWeights& weights, const CameraIntrinsics& intrinsics);

struct GradientEstimate {
  Vec3 g;  // objective units per meter, camera frame
  double residual_norm = 0.0;

  double magnitude() const { return norm(g); }
  friend bool operator==(const GradientEstimate&, const GradientEstimate&) = default;
};

/// Least-squares directional-derivative fit. Row i of the system is the unit
/// offset direction; its right-hand side is the finite difference
/// (f_i - f_ref) / |offset_i|. Solved by Householder QR.
GradientEstimate estimate_gradient(double f_ref, std::span<const double> f_peripheral, std::span<const Vec3> offsets);

}  // namespace mts
