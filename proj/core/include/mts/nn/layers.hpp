#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mts/nn/tensor.hpp"
#include "mts/rng.hpp"

namespace mts::nn {

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Batch-first layer. forward() caches what backward() needs, so calls must
/// alternate forward/backward on the same batch.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string type() const = 0;
  /// Per-sample output shape for a per-sample input shape; throws ShapeError.
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& input) = 0;
  /// Takes dLoss/dOutput, accumulates parameter gradients, returns dLoss/dInput.
  virtual Tensor backward(const Tensor& grad_output) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  /// Glorot-uniform weights, zero biases.
  virtual void initialize(Rng&) {}
  /// Hyperparameters only (no parameter values).
  virtual nlohmann::json descriptor() const;
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// 2-D convolution, stride 1, square kernel, symmetric zero padding.
class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel = 3, int padding = 1);

  std::string type() const override { return "conv2d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override;
  nlohmann::json descriptor() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  Parameter& weight() { return weight_; }  // [out, in, k, k]
  Parameter& bias() { return bias_; }      // [out]

 private:
  int in_, out_, kernel_, padding_;
  Parameter weight_, bias_;
  Tensor input_;
};

class ReLU final : public Layer {
 public:
  std::string type() const override { return "relu"; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  Tensor input_;
};

/// Non-overlapping max pooling; the first maximum wins ties.
class MaxPool2d final : public Layer {
 public:
  explicit MaxPool2d(int size = 2) : size_(size) {}

  std::string type() const override { return "maxpool2d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  nlohmann::json descriptor() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }

 private:
  int size_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class Flatten final : public Layer {
 public:
  std::string type() const override { return "flatten"; }
  Shape output_shape(const Shape& input) const override { return {static_cast<int>(element_count(input))}; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
};

/// Fully connected: y = W x + b with W of shape [out, in].
class Dense final : public Layer {
 public:
  Dense(int in_features, int out_features);

  std::string type() const override { return "dense"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override;
  nlohmann::json descriptor() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  int in_, out_;
  Parameter weight_, bias_;
  Tensor input_;
};

/// Builds a layer (without parameter values) from its descriptor; throws
/// std::invalid_argument for unknown types or bad hyperparameters.
std::unique_ptr<Layer> make_layer(const nlohmann::json& descriptor);

}  // namespace mts::nn
