#include "mts/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace mts {

namespace {

// Householder QR least squares for an n x 3 system. Returns false when a
// column is (numerically) dependent on the previous ones.
bool solve_least_squares_3(std::vector<std::array<double, 3>> a, std::vector<double> b, Vec3& out) {
  const std::size_t n = a.size();
  if (n < 3) return false;
  const double tol = 1e-9 * std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < 3; ++k) {
    double col_norm = 0.0;
    for (std::size_t i = k; i < n; ++i) col_norm += a[i][k] * a[i][k];
    col_norm = std::sqrt(col_norm);
    if (col_norm < tol) return false;
    const double alpha = a[k][k] > 0.0 ? -col_norm : col_norm;
    std::vector<double> v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = a[i][k];
    v[0] -= alpha;
    double v_norm2 = 0.0;
    for (double x : v) v_norm2 += x * x;
    if (v_norm2 == 0.0) continue;
    for (std::size_t j = k; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i - k] * a[i][j];
      s = 2.0 * s / v_norm2;
      for (std::size_t i = k; i < n; ++i) a[i][j] -= s * v[i - k];
    }
    double s = 0.0;
    for (std::size_t i = k; i < n; ++i) s += v[i - k] * b[i];
    s = 2.0 * s / v_norm2;
    for (std::size_t i = k; i < n; ++i) b[i] -= s * v[i - k];
    if (std::abs(a[k][k]) < tol) return false;
  }
  std::array<double, 3> x{};
  for (int k = 2; k >= 0; --k) {
    double s = b[k];
    for (int j = k + 1; j < 3; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  out = {x[0], x[1], x[2]};
  return true;
}

}  // namespace

void CameraArraySpec::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("camera array radius must be > 0");
  if (peripheral_count < 3) throw std::invalid_argument("camera array needs at least 3 peripheral cameras");
  if (!std::isfinite(polar_angle)) throw std::invalid_argument("camera array polar angle must be finite");
  std::vector<std::array<double, 3>> rows;
  for (const Vec3& o : array_offsets(*this)) {
    const Vec3 u = normalized(o);
    rows.push_back({u.x, u.y, u.z});
  }
  Vec3 unused;
  if (!solve_least_squares_3(rows, std::vector<double>(rows.size(), 0.0), unused))
    throw DegenerateGeometryError("camera array offsets do not span 3 dimensions");
}

std::vector<Vec3> array_offsets(const CameraArraySpec& spec) {
  std::vector<Vec3> offsets;
  offsets.reserve(static_cast<std::size_t>(std::max(spec.peripheral_count, 0)));
  const double s = std::sin(spec.polar_angle);
  const double c = std::cos(spec.polar_angle);
  for (int i = 0; i < spec.peripheral_count; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / spec.peripheral_count;
    offsets.push_back(spec.radius * Vec3{s * std::cos(theta), s * std::sin(theta), c});
  }
  return offsets;
}

void ObjectiveWeights::validate() const {
  if (std::abs(w1 + w2 - 1.0) > 1e-12) throw std::invalid_argument("objective weights must sum to 1");
  if (w2 != 0.0 || w1 != 1.0) throw std::invalid_argument("mobility weight must be 0: arm mobility is not modelled");
}

ArrayMeasurement evaluate_objective_array(const ObjectiveFn& objective, const Pose& rig, const CameraArraySpec& spec) {
  ArrayMeasurement m;
  m.f_ref = objective(rig);
  for (const Vec3& offset : array_offsets(spec)) {
    m.f_peripheral.push_back(objective(Pose{rig.to_world(offset), rig.orientation}));
  }
  return m;
}

ArrayMeasurement evaluate_objective_array(const SceneInstance& scene, const Pose& rig, const CameraArraySpec& spec,
                                          const ObjectiveWeights& weights, const CameraIntrinsics& intrinsics) {
  weights.validate();
  return evaluate_objective_array(
      [&](const Pose& camera) { return weights.combine(fruit_fraction(render_labels(scene, camera, intrinsics))); },
      rig, spec);
}

GradientEstimate estimate_gradient(double f_ref, std::span<const double> f_peripheral, std::span<const Vec3> offsets) {
  if (f_peripheral.size() != offsets.size())
    throw std::invalid_argument("estimate_gradient: " + std::to_string(f_peripheral.size()) + " samples for " +
                                std::to_string(offsets.size()) + " offsets");
  if (offsets.size() < 3) throw DegenerateGeometryError("estimate_gradient: need at least 3 offsets");

  std::vector<std::array<double, 3>> rows(offsets.size());
  std::vector<double> rhs(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double len = norm(offsets[i]);
    if (!(len > 0.0)) throw DegenerateGeometryError("estimate_gradient: zero-length offset");
    rows[i] = {offsets[i].x / len, offsets[i].y / len, offsets[i].z / len};
    rhs[i] = (f_peripheral[i] - f_ref) / len;
  }

  GradientEstimate est;
  if (!solve_least_squares_3(rows, rhs, est.g))
    throw DegenerateGeometryError("estimate_gradient: offset directions have rank < 3");

  double r2 = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = rows[i][0] * est.g.x + rows[i][1] * est.g.y + rows[i][2] * est.g.z - rhs[i];
    r2 += r * r;
  }
  est.residual_norm = std::sqrt(r2);
  return est;
}

}  // namespace mts
