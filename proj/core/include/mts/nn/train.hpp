#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mts/dataset.hpp"
#include "mts/nn/model.hpp"

namespace mts::nn {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1e-2;
  double decay_factor = 0.01;  // learning rate multiplier ...
  int decay_every = 25;        // ... applied after every this many epochs
  std::uint64_t shuffle_seed = 1;
  std::uint64_t init_seed = 1;

  /// Throws std::invalid_argument.
  void validate() const;
  double learning_rate_at(int epoch) const;  // epoch is 1-based
};

nlohmann::json to_json_value(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Epoch 0 is the freshly initialized model. Both losses are full passes
/// over their set with the weights as they stand at the end of the epoch.
struct EpochLoss {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;  // NaN without a validation set
};

struct TrainResult {
  std::vector<EpochLoss> curve;
  /// Epoch (>= 1) with the lowest validation loss, 0 without a validation set.
  int best_epoch() const;
};

/// Samples -> [N, 3, H, W] batch and [N, 3] targets.
Tensor stack_images(std::span<const Sample> samples);
Tensor stack_targets(std::span<const Sample> samples);

/// Mean squared error of the model over a sample set, evaluated in chunks.
double evaluate_mse(Model& model, std::span<const Sample> samples, int chunk = 256);

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Reinitializes the model from config.init_seed, then runs mini-batch SGD.
/// Throws std::invalid_argument for an empty training set and
/// std::runtime_error if the loss becomes non-finite.
TrainResult train(Model& model, const DatasetSplit& split, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// "epoch,train_mse,val_mse" rows.
std::string loss_curve_csv(const TrainResult& result);

}  // namespace mts::nn
