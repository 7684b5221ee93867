#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mts/nn/layers.hpp"

namespace mts::nn {

/// Malformed model document (parse error, missing field, bad parameter array).
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed document whose layers do not form a 3-output regressor.
class ArchitectureMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sequential stack of layers over a fixed per-sample input shape.
class Model {
 public:
  Model() = default;
  /// Throws ShapeError if the layer shapes do not chain.
  Model(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers);

  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// batch x input_shape -> batch x output_shape.
  Tensor forward(const Tensor& batch);
  /// Backpropagates dLoss/dOutput of the most recent forward(); parameter
  /// gradients accumulate until zero_grad().
  Tensor backward(const Tensor& grad_output);
  void zero_grad();

  std::vector<Parameter*> parameters();
  std::size_t parameter_count();
  void initialize(std::uint64_t seed);

 private:
  Shape input_shape_;
  Shape output_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// conv(3->8) relu pool conv(8->16) relu pool flatten dense(1024->64) relu
/// dense(64->3) on 3x32x32 inputs.
Model make_standard_model();

/// Same topology with halved widths on 3x8x8 inputs, used for gradient checks.
Model make_reduced_model();

/// Mean over batch and components of the squared error.
double mse_loss(const Tensor& predictions, const Tensor& targets);
/// d mse_loss / d predictions.
Tensor mse_loss_grad(const Tensor& predictions, const Tensor& targets);

/// zero_grad, forward, backward through mse_loss; returns the loss.
double compute_gradients(Model& model, const Tensor& batch, const Tensor& targets);

nlohmann::json model_to_json(const Model& model);
/// Throws ModelFormatError or ArchitectureMismatch.
Model model_from_json(const nlohmann::json& doc);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace mts::nn
