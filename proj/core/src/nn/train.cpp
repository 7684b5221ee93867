#include "mts/nn/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mts/rng.hpp"

namespace mts::nn {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(decay_factor > 0.0) || !std::isfinite(decay_factor)) throw std::invalid_argument("train: decay_factor must be > 0");
  if (decay_every < 1) throw std::invalid_argument("train: decay_every must be >= 1");
}

double TrainConfig::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(decay_factor, (epoch - 1) / decay_every);
}

nlohmann::json to_json_value(const TrainConfig& c) {
  return {{"epochs", c.epochs},           {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"decay_factor", c.decay_factor}, {"decay_every", c.decay_every}, {"shuffle_seed", c.shuffle_seed},
          {"init_seed", c.init_seed},     {"optimizer", "sgd"},         {"loss", "mse"}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.decay_factor = j.at("decay_factor").get<double>();
  c.decay_every = j.at("decay_every").get<int>();
  c.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

int TrainResult::best_epoch() const {
  int best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (const EpochLoss& e : curve) {
    if (e.epoch >= 1 && e.val_mse < best_loss) {
      best_loss = e.val_mse;
      best = e.epoch;
    }
  }
  return best;
}

Tensor stack_images(std::span<const Sample> samples) {
  if (samples.empty()) throw ShapeError("stack_images: no samples");
  const int w = samples[0].image.width, h = samples[0].image.height;
  const std::size_t per = 3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  Tensor out({static_cast<int>(samples.size()), 3, h, w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ColorImage& img = samples[i].image;
    if (img.width != w || img.height != h || img.values.size() != per)
      throw ShapeError("stack_images: sample " + std::to_string(i) + " has a different image size");
    std::copy(img.values.begin(), img.values.end(), out.data() + i * per);
  }
  return out;
}

Tensor stack_targets(std::span<const Sample> samples) {
  Tensor out({static_cast<int>(samples.size()), 3});
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (int c = 0; c < 3; ++c) out[i * 3 + c] = samples[i].target[c];
  return out;
}

double evaluate_mse(Model& model, std::span<const Sample> samples, int chunk) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (std::size_t at = 0; at < samples.size(); at += static_cast<std::size_t>(chunk)) {
    const auto part = samples.subspan(at, std::min<std::size_t>(static_cast<std::size_t>(chunk), samples.size() - at));
    sum += mse_loss(model.forward(stack_images(part)), stack_targets(part)) * static_cast<double>(part.size());
  }
  return sum / static_cast<double>(samples.size());
}

TrainResult train(Model& model, const DatasetSplit& split, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");
  model.initialize(config.init_seed);

  TrainResult result;
  auto record = [&](int epoch, double lr) {
    EpochLoss e{epoch, lr, evaluate_mse(model, split.train), evaluate_mse(model, split.validation)};
    if (!std::isfinite(e.train_mse)) throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    result.curve.push_back(e);
    if (on_epoch) on_epoch(e);
  };
  record(0, 0.0);

  const std::size_t n = split.train.size();
  std::vector<std::size_t> order(n);
  std::vector<Sample> batch;
  const auto params = model.parameters();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.shuffle_seed, 0x5348'5546 /* "SHUF" */, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);

    const double lr = config.learning_rate_at(epoch);
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, at + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = at; i < end; ++i) batch.push_back(split.train[order[i]]);
      const double loss = compute_gradients(model, stack_images(batch), stack_targets(batch));
      if (!std::isfinite(loss)) throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      for (Parameter* p : params) {
        float* v = p->value.data();
        const float* g = p->grad.data();
        const auto step = static_cast<float>(lr);
        for (std::size_t k = 0; k < p->value.size(); ++k) v[k] -= step * g[k];
      }
    }
    record(epoch, lr);
  }
  return result;
}

std::string loss_curve_csv(const TrainResult& result) {
  std::string out = "epoch,train_mse,val_mse\n";
  char buf[96];
  for (const EpochLoss& e : result.curve) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.train_mse, e.val_mse);
    out += buf;
  }
  return out;
}

}  // namespace mts::nn
