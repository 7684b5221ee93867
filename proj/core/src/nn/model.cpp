#include "mts/nn/model.hpp"

#include <cstdio>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "mts/file_io.hpp"

namespace mts::nn {

namespace {

constexpr const char* kFormat = "mts-model";
constexpr int kVersion = 1;

// 9 significant digits round-trip every binary32 value.
double nine_digits(float v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return std::strtod(buf, nullptr);
}

nlohmann::json tensor_to_json(const Tensor& t) {
  nlohmann::json data = nlohmann::json::array();
  for (float v : t.values()) data.push_back(nine_digits(v));
  return {{"shape", t.shape()}, {"data", std::move(data)}};
}

void tensor_from_json(const nlohmann::json& j, Tensor& into, const std::string& where) {
  const Shape shape = j.at("shape").get<Shape>();
  if (shape != into.shape())
    throw ArchitectureMismatch(where + ": parameter shape " + to_string(shape) + ", layer expects " + to_string(into.shape()));
  const auto& data = j.at("data");
  if (!data.is_array() || data.size() != into.size()) throw ModelFormatError(where + ": parameter data length mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) {
    if (!data[i].is_number()) throw ModelFormatError(where + ": non-numeric parameter value");
    into[i] = static_cast<float>(data[i].get<double>());
  }
  if (!into.all_finite()) throw ModelFormatError(where + ": non-finite parameter value");
}

std::vector<std::unique_ptr<Layer>> cnn_layers(int c1, int c2, int hidden, int spatial) {
  std::vector<std::unique_ptr<Layer>> l;
  l.push_back(std::make_unique<Conv2d>(3, c1, 3, 1));
  l.push_back(std::make_unique<ReLU>());
  l.push_back(std::make_unique<MaxPool2d>(2));
  l.push_back(std::make_unique<Conv2d>(c1, c2, 3, 1));
  l.push_back(std::make_unique<ReLU>());
  l.push_back(std::make_unique<MaxPool2d>(2));
  l.push_back(std::make_unique<Flatten>());
  const int s = spatial / 4;
  l.push_back(std::make_unique<Dense>(c2 * s * s, hidden));
  l.push_back(std::make_unique<ReLU>());
  l.push_back(std::make_unique<Dense>(hidden, 3));
  return l;
}

}  // namespace

Model::Model(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  Shape s = input_shape_;
  for (const auto& l : layers_) s = l->output_shape(s);
  output_shape_ = s;
}

Model::Model(const Model& other) : input_shape_(other.input_shape_), output_shape_(other.output_shape_) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor Model::forward(const Tensor& batch) {
  if (batch.rank() != input_shape_.size() + 1 || Shape(batch.shape().begin() + 1, batch.shape().end()) != input_shape_)
    throw ShapeError("model expects [N, " + to_string(input_shape_).substr(1) + ", got " + to_string(batch.shape()));
  Tensor x = batch;
  for (auto& l : layers_) x = l->forward(x);
  return x;
}

Tensor Model::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0f);
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (Parameter* p : l->parameters()) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->value.size();
  return n;
}

void Model::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->initialize(rng);
}

Model make_standard_model() { return Model({3, 32, 32}, cnn_layers(8, 16, 64, 32)); }

Model make_reduced_model() { return Model({3, 8, 8}, cnn_layers(4, 8, 32, 8)); }

double mse_loss(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape())
    throw ShapeError("mse: predictions " + to_string(predictions.shape()) + " vs targets " + to_string(targets.shape()));
  if (predictions.size() == 0) throw ShapeError("mse: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = static_cast<double>(predictions[i]) - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predictions.size());
}

Tensor mse_loss_grad(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape())
    throw ShapeError("mse: predictions " + to_string(predictions.shape()) + " vs targets " + to_string(targets.shape()));
  Tensor g(predictions.shape());
  const double scale = 2.0 / static_cast<double>(predictions.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = static_cast<float>(scale * (static_cast<double>(predictions[i]) - targets[i]));
  return g;
}

double compute_gradients(Model& model, const Tensor& batch, const Tensor& targets) {
  model.zero_grad();
  const Tensor pred = model.forward(batch);
  const double loss = mse_loss(pred, targets);
  model.backward(mse_loss_grad(pred, targets));
  return loss;
}

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json layers = nlohmann::json::array();
  Model& m = const_cast<Model&>(model);  // parameters() is non-const; nothing is modified
  for (std::size_t i = 0; i < m.layer_count(); ++i) {
    nlohmann::json d = m.layer(i).descriptor();
    nlohmann::json params = nlohmann::json::object();
    for (Parameter* p : m.layer(i).parameters()) params[p->name] = tensor_to_json(p->value);
    if (!params.empty()) d["parameters"] = std::move(params);
    layers.push_back(std::move(d));
  }
  return {{"format", kFormat}, {"version", kVersion}, {"input_shape", model.input_shape()},
          {"output_shape", model.output_shape()}, {"layers", std::move(layers)}};
}

Model model_from_json(const nlohmann::json& doc) {
  Model model;
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormat) throw ModelFormatError("not an mts model document");
    if (doc.at("version").get<int>() != kVersion) throw ModelFormatError("unsupported model version");
    std::vector<std::unique_ptr<Layer>> layers;
    for (const auto& d : doc.at("layers")) layers.push_back(make_layer(d));
    try {
      model = Model(doc.at("input_shape").get<Shape>(), std::move(layers));
    } catch (const ShapeError& e) {
      throw ArchitectureMismatch(std::string("layers do not chain: ") + e.what());
    }
    if (model.output_shape() != Shape{3})
      throw ArchitectureMismatch("regressor must output 3 values, document gives " + to_string(model.output_shape()));
    const auto& jl = doc.at("layers");
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
      for (Parameter* p : model.layer(i).parameters()) {
        const std::string where = "layer " + std::to_string(i) + " " + p->name;
        tensor_from_json(jl[i].at("parameters").at(p->name), p->value, where);
        p->grad = Tensor(p->value.shape());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ShapeError*>(&e)) throw ArchitectureMismatch(e.what());
    throw ModelFormatError(std::string("malformed model document: ") + e.what());
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) { write_json_file(path, model_to_json(model)); }

Model load_model(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = read_json_file(path);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelFormatError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace mts::nn
