#include <algorithm>
#include <cmath>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mts/file_io.hpp"
#include "mts/nn/model.hpp"
#include "mts/nn/train.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace mts::nn {
namespace {

using mts::testing::TempDir;

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

template <class... L>
Model stack(Shape input, L... layers) {
  std::vector<std::unique_ptr<Layer>> v;
  (v.push_back(std::make_unique<L>(std::move(layers))), ...);
  return Model(std::move(input), std::move(v));
}

void expect_gradients_match(Model& model, const Tensor& batch, const Tensor& targets) {
  for (const auto& c : mts::oracle::gradient_check(model, batch, targets, 1e-3f)) {
    EXPECT_LT(c.relative_error, 1e-3) << c.name << " |g| = " << c.analytic_norm;
    EXPECT_GT(c.analytic_norm, 0.0) << c.name;
    EXPECT_EQ(c.kink_crossings, 0u) << c.name;
  }
}

TEST(Layers, ReluExamples) {
  ReLU relu;
  const Tensor out = relu.forward(Tensor({1, 2}, {-1.0f, 2.5f}));
  EXPECT_EQ(out[0], 0.0f);
  EXPECT_EQ(out[1], 2.5f);
}

TEST(Layers, ZeroParametersGiveZeroOutput) {
  Model m = make_standard_model();
  for (Parameter* p : m.parameters()) p->value.fill(0.0f);
  const Tensor out = m.forward(random_tensor({4, 3, 32, 32}, 1, 0, 1));
  EXPECT_EQ(out.shape(), (Shape{4, 3}));
  for (float v : out.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Layers, IdentityConvolution) {
  Conv2d conv(1, 1, 3, 1);
  conv.weight().value.fill(0.0f);
  conv.weight().value[4] = 1.0f;
  conv.bias().value.fill(0.0f);
  const Tensor in = random_tensor({1, 1, 4, 4}, 2);
  EXPECT_EQ(conv.forward(in), in);
}

TEST(Layers, MaxPoolPicksBlockMaxima) {
  MaxPool2d pool(2);
  const Tensor in({1, 1, 2, 4}, {1, 5, 2, 2, 3, 4, 2, 2});
  const Tensor out = pool.forward(in);
  EXPECT_EQ(out, Tensor({1, 1, 1, 2}, {5, 2}));
  // Ties route the gradient to the first maximum only.
  const Tensor g = pool.backward(Tensor({1, 1, 1, 2}, {1, 1}));
  EXPECT_EQ(g, Tensor({1, 1, 2, 4}, {0, 1, 1, 0, 0, 0, 0, 0}));
}

TEST(Layers, ShapeErrors) {
  Model m = make_reduced_model();
  EXPECT_THROW(m.forward(Tensor({2, 3, 9, 8})), ShapeError);
  EXPECT_THROW(m.forward(Tensor({3, 8, 8})), ShapeError);
  EXPECT_THROW(mse_loss(Tensor({2, 3}), Tensor({3, 2})), ShapeError);
  EXPECT_THROW(stack(Shape{3, 8, 8}, Flatten(), Dense(100, 3)), ShapeError);
  EXPECT_THROW(MaxPool2d(2).output_shape({1, 3, 3}), ShapeError);
}

TEST(Loss, Examples) {
  const Tensor t = random_tensor({5, 3}, 3);
  EXPECT_EQ(mse_loss(t, t), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(Tensor({1, 3}, {1, 0, 0}), Tensor({1, 3})), 1.0 / 3.0);
}

TEST(Backprop, ConvLayerMatchesFiniteDifferences) {
  Model m = stack(Shape{2, 5, 5}, Conv2d(2, 3, 3, 1), Flatten(), Dense(75, 3));
  m.initialize(4);
  for (Parameter* p : m.parameters()) p->value = random_tensor(p->value.shape(), 40 + p->value.size(), -0.5, 0.5);
  expect_gradients_match(m, random_tensor({3, 2, 5, 5}, 5), random_tensor({3, 3}, 6));
}

TEST(Backprop, UnpaddedConvMatchesFiniteDifferences) {
  Model m = stack(Shape{1, 6, 6}, Conv2d(1, 2, 3, 0), Flatten(), Dense(32, 3));
  m.initialize(7);
  expect_gradients_match(m, random_tensor({2, 1, 6, 6}, 8), random_tensor({2, 3}, 9));
}

TEST(Backprop, DenseReluPoolMatchFiniteDifferences) {
  Model m = stack(Shape{1, 4, 4}, MaxPool2d(2), Flatten(), Dense(4, 6), ReLU(), Dense(6, 3));
  m.initialize(10);
  expect_gradients_match(m, random_tensor({4, 1, 4, 4}, 11), random_tensor({4, 3}, 12));
}

TEST(Backprop, ReducedModelMatchesFiniteDifferences) {
  Model m = make_reduced_model();
  m.initialize(13);
  EXPECT_EQ(m.input_shape(), (Shape{3, 8, 8}));
  const auto checks =
      mts::oracle::gradient_check(m, random_tensor({4, 3, 8, 8}, 14, 0, 1), random_tensor({4, 3}, 15), 1e-3f);
  ASSERT_EQ(checks.size(), 8u);
  EXPECT_TRUE(mts::oracle::enough_coverage(checks));
  for (const auto& c : checks) EXPECT_LT(c.relative_error, 1e-3) << c.name;
}

TEST(Backprop, OracleSkipsUnresolvableKinks) {
  // Hidden unit 0 sits exactly on the ReLU kink for a zero input, so any
  // perturbation of its bias changes the piece. Nothing else can move it.
  Model m = stack(Shape{2}, Dense(2, 2), ReLU(), Dense(2, 3));
  m.initialize(21);
  auto& first = dynamic_cast<Dense&>(m.layer(0));
  first.bias().value[0] = 0.0f;
  first.bias().value[1] = 0.5f;
  const auto checks = mts::oracle::gradient_check(m, Tensor({1, 2}), random_tensor({1, 3}, 22), 1e-3f);
  ASSERT_EQ(checks.size(), 4u);
  for (const auto& c : checks) EXPECT_LT(c.relative_error, 1e-3) << c.name;
  EXPECT_EQ(checks[0].kink_crossings, 0u);
  EXPECT_EQ(checks[1].kink_crossings, 1u);
  EXPECT_EQ(checks[2].kink_crossings, 0u);
  EXPECT_EQ(checks[3].kink_crossings, 0u);
}

TEST(Backprop, DuplicatedBatchLeavesGradientsUnchanged) {
  Model m = make_reduced_model();
  m.initialize(16);
  const Tensor x = random_tensor({3, 3, 8, 8}, 17, 0, 1), y = random_tensor({3, 3}, 18);
  Tensor x2({6, 3, 8, 8}), y2({6, 3});
  for (std::size_t i = 0; i < x2.size(); ++i) x2[i] = x[i % x.size()];
  for (std::size_t i = 0; i < y2.size(); ++i) y2[i] = y[i % y.size()];
  compute_gradients(m, x, y);
  std::vector<Tensor> single;
  for (Parameter* p : m.parameters()) single.push_back(p->grad);
  compute_gradients(m, x2, y2);
  const auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t k = 0; k < single[i].size(); ++k)
      EXPECT_NEAR(params[i]->grad[k], single[i][k], 1e-6 + 1e-5 * std::abs(single[i][k])) << params[i]->name;
}

TEST(Backprop, ZeroLossGivesZeroFinalBiasGradient) {
  Model m = make_reduced_model();
  m.initialize(19);
  const Tensor x = random_tensor({2, 3, 8, 8}, 20, 0, 1);
  const Tensor y = m.forward(x);
  EXPECT_EQ(compute_gradients(m, x, y), 0.0);
  auto& last = dynamic_cast<Dense&>(m.layer(m.layer_count() - 1));
  for (float g : last.bias().grad.values()) EXPECT_EQ(g, 0.0f);
}

TEST(Init, GlorotBoundsAndSeeding) {
  Model a = make_standard_model(), b = make_standard_model();
  a.initialize(21);
  b.initialize(21);
  EXPECT_EQ(model_to_json(a), model_to_json(b));
  b.initialize(22);
  EXPECT_NE(model_to_json(a), model_to_json(b));
  auto& dense = dynamic_cast<Dense&>(a.layer(7));
  const double limit = std::sqrt(6.0 / (1024 + 64));
  for (float v : dense.weight().value.values()) EXPECT_LE(std::abs(v), limit);
  for (float v : dense.bias().value.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(a.parameter_count(), 8u * 27 + 8 + 16 * 72 + 16 + 1024 * 64 + 64 + 64 * 3 + 3);
}

// Targets are a fixed linear map of the per-channel mean intensities.
DatasetSplit linear_task(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const double A[3][3] = {{1.0, -0.5, 0.2}, {0.3, 0.8, -0.6}, {-0.4, 0.1, 0.9}};
  DatasetSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    Sample smp;
    smp.image = ColorImage(8, 8);
    double mean[3] = {};
    for (int c = 0; c < 3; ++c) {
      const double level = rng.uniform();
      for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
          const float x = static_cast<float>(std::clamp(level + rng.uniform(-0.2, 0.2), 0.0, 1.0));
          smp.image.at(c, u, v) = x;
          mean[c] += x / 64.0;
        }
    }
    for (int r = 0; r < 3; ++r) smp.target[r] = static_cast<float>(A[r][0] * mean[0] + A[r][1] * mean[1] + A[r][2] * mean[2]);
    smp.step_index = static_cast<std::uint32_t>(i);
    (i % 4 == 3 ? s.validation : s.train).push_back(std::move(smp));
  }
  return s;
}

TEST(Train, LearnsSyntheticLinearTask) {
  const DatasetSplit data = linear_task(200, 23);
  Model m = make_reduced_model();
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  const TrainResult r = train(m, data, cfg);
  ASSERT_EQ(r.curve.size(), 41u);
  EXPECT_EQ(r.curve.front().epoch, 0);
  EXPECT_LT(r.curve.back().train_mse, 0.1 * r.curve.front().train_mse);
  EXPECT_DOUBLE_EQ(r.curve.back().train_mse, evaluate_mse(m, data.train));
  EXPECT_DOUBLE_EQ(r.curve.back().val_mse, evaluate_mse(m, data.validation));
  EXPECT_GE(r.best_epoch(), 1);
}

TEST(Train, IdenticalSeedsGiveIdenticalCurves) {
  const DatasetSplit data = linear_task(50, 24);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 7;  // keeps a partial final batch
  Model a = make_reduced_model(), b = make_reduced_model();
  const TrainResult ra = train(a, data, cfg);
  const TrainResult rb = train(b, data, cfg);
  EXPECT_EQ(loss_curve_csv(ra), loss_curve_csv(rb));
  EXPECT_EQ(model_to_json(a), model_to_json(b));
  cfg.shuffle_seed = 2;
  Model c = make_reduced_model();
  EXPECT_NE(loss_curve_csv(train(c, data, cfg)), loss_curve_csv(ra));
}

TEST(Train, ScheduleAndErrors) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.epochs, 50);
  EXPECT_EQ(cfg.batch_size, 64);
  EXPECT_DOUBLE_EQ(cfg.learning_rate_at(1), cfg.learning_rate);
  EXPECT_DOUBLE_EQ(cfg.learning_rate_at(25), cfg.learning_rate);
  EXPECT_DOUBLE_EQ(cfg.learning_rate_at(26), cfg.learning_rate * 0.01);
  EXPECT_EQ(train_config_from_json(to_json_value(cfg)).learning_rate, cfg.learning_rate);
  Model m = make_reduced_model();
  EXPECT_THROW(train(m, DatasetSplit{}, cfg), std::invalid_argument);
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Train, NoValidationSet) {
  DatasetSplit data = linear_task(20, 25);
  data.validation.clear();
  TrainConfig cfg;
  cfg.epochs = 2;
  Model m = make_reduced_model();
  const TrainResult r = train(m, data, cfg);
  EXPECT_TRUE(std::isnan(r.curve.back().val_mse));
  EXPECT_EQ(r.best_epoch(), 0);
  EXPECT_EQ(loss_curve_csv(r).substr(0, 23), "epoch,train_mse,val_mse");
}

TEST(Persistence, RoundTripIsBitExact) {
  TempDir dir;
  Model m = make_standard_model();
  m.initialize(26);
  for (Parameter* p : m.parameters()) p->value = random_tensor(p->value.shape(), 27, -3, 3);
  m.parameters()[0]->value[0] = 1.17549435e-38f;
  m.parameters()[0]->value[1] = -0.0f;
  const auto path = dir / "m.json";
  save_model(m, path);
  Model back = load_model(path);
  const Tensor probe = random_tensor({3, 3, 32, 32}, 28, 0, 1);
  EXPECT_EQ(back.forward(probe), m.forward(probe));
  const auto pa = m.parameters(), pb = back.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  save_model(back, dir / "m2.json");
  EXPECT_EQ(read_text_file(path), read_text_file(dir / "m2.json"));
}

TEST(Persistence, DistinctErrors) {
  TempDir dir;
  Model m = make_reduced_model();
  m.initialize(29);
  const auto path = dir / "m.json";
  save_model(m, path);
  const std::string text = read_text_file(path);

  write_text_file(dir / "trunc.json", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_model(dir / "trunc.json"), ModelFormatError);

  nlohmann::json doc = nlohmann::json::parse(text);
  doc["layers"].back()["out_features"] = 4;
  doc["layers"].back()["parameters"]["weight"]["shape"] = {4, 16};
  doc["layers"].back()["parameters"]["weight"]["data"] = std::vector<double>(64, 0.0);
  doc["layers"].back()["parameters"]["bias"]["shape"] = {4};
  doc["layers"].back()["parameters"]["bias"]["data"] = std::vector<double>(4, 0.0);
  EXPECT_THROW(model_from_json(doc), ArchitectureMismatch);

  doc = nlohmann::json::parse(text);
  doc.erase("layers");
  EXPECT_THROW(model_from_json(doc), ModelFormatError);

  doc = nlohmann::json::parse(text);
  doc["layers"][0]["parameters"]["weight"]["data"][0] = "x";
  EXPECT_THROW(model_from_json(doc), ModelFormatError);

  EXPECT_THROW(load_model(dir / "missing.json"), std::runtime_error);
}

}  // namespace
}  // namespace mts::nn
