#include "mts/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace mts::nn {

namespace {

void glorot_uniform(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-limit, limit));
}

void expect_rank(const Tensor& t, std::size_t rank, const char* layer) {
  if (t.rank() != rank)
    throw ShapeError(std::string(layer) + ": expected rank-" + std::to_string(rank) + " batch, got " + to_string(t.shape()));
}

std::size_t plane(int h, int w) { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }

}  // namespace

nlohmann::json Layer::descriptor() const { return {{"type", type()}}; }

// Conv2d --------------------------------------------------------------------

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int padding)
    : in_(in_channels), out_(out_channels), kernel_(kernel), padding_(padding) {
  if (in_ < 1 || out_ < 1 || kernel_ < 1 || padding_ < 0) throw std::invalid_argument("conv2d: bad hyperparameters");
  weight_ = {"weight", Tensor({out_, in_, kernel_, kernel_}), Tensor({out_, in_, kernel_, kernel_})};
  bias_ = {"bias", Tensor({out_}), Tensor({out_})};
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] != in_)
    throw ShapeError("conv2d: expected [" + std::to_string(in_) + ", H, W], got " + to_string(input));
  const int h = input[1] + 2 * padding_ - kernel_ + 1;
  const int w = input[2] + 2 * padding_ - kernel_ + 1;
  if (h < 1 || w < 1) throw ShapeError("conv2d: input " + to_string(input) + " smaller than kernel");
  return {out_, h, w};
}

void Conv2d::initialize(Rng& rng) {
  glorot_uniform(weight_.value, in_ * kernel_ * kernel_, out_ * kernel_ * kernel_, rng);
  bias_.value.fill(0.0f);
}

nlohmann::json Conv2d::descriptor() const {
  return {{"type", type()}, {"in_channels", in_}, {"out_channels", out_}, {"kernel", kernel_}, {"stride", 1}, {"padding", padding_}};
}

Tensor Conv2d::forward(const Tensor& input) {
  expect_rank(input, 4, "conv2d");
  const Shape os = output_shape({input.dim(1), input.dim(2), input.dim(3)});
  const int n = input.dim(0), ih = input.dim(2), iw = input.dim(3), oh = os[1], ow = os[2];
  input_ = input;
  Tensor out({n, out_, oh, ow});
  const float* w = weight_.value.data();
  for (int b = 0; b < n; ++b) {
    for (int oc = 0; oc < out_; ++oc) {
      float* dst = out.data() + (static_cast<std::size_t>(b) * out_ + oc) * plane(oh, ow);
      std::fill(dst, dst + plane(oh, ow), bias_.value[oc]);
      for (int ic = 0; ic < in_; ++ic) {
        const float* src = input.data() + (static_cast<std::size_t>(b) * in_ + ic) * plane(ih, iw);
        for (int ky = 0; ky < kernel_; ++ky) {
          for (int kx = 0; kx < kernel_; ++kx) {
            const float k = w[((static_cast<std::size_t>(oc) * in_ + ic) * kernel_ + ky) * kernel_ + kx];
            const int x0 = std::max(0, padding_ - kx);
            const int x1 = std::min(ow, iw + padding_ - kx);
            for (int y = 0; y < oh; ++y) {
              const int iy = y + ky - padding_;
              if (iy < 0 || iy >= ih) continue;
              const float* row = src + static_cast<std::size_t>(iy) * iw + (kx - padding_);
              float* out_row = dst + static_cast<std::size_t>(y) * ow;
              for (int x = x0; x < x1; ++x) out_row[x] += k * row[x];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_output) {
  const int n = input_.dim(0), ih = input_.dim(2), iw = input_.dim(3);
  const int oh = grad_output.dim(2), ow = grad_output.dim(3);
  if (grad_output.shape() != Shape{n, out_, oh, ow}) throw ShapeError("conv2d: gradient shape mismatch");
  Tensor grad_input(input_.shape());
  const float* w = weight_.value.data();
  float* gw = weight_.grad.data();

  for (int oc = 0; oc < out_; ++oc) {
    double gb = 0.0;
    for (int b = 0; b < n; ++b) {
      const float* go = grad_output.data() + (static_cast<std::size_t>(b) * out_ + oc) * plane(oh, ow);
      for (std::size_t i = 0; i < plane(oh, ow); ++i) gb += go[i];
    }
    bias_.grad[oc] += static_cast<float>(gb);

    for (int ic = 0; ic < in_; ++ic) {
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          const std::size_t wi = ((static_cast<std::size_t>(oc) * in_ + ic) * kernel_ + ky) * kernel_ + kx;
          const float k = w[wi];
          const int x0 = std::max(0, padding_ - kx);
          const int x1 = std::min(ow, iw + padding_ - kx);
          double acc = 0.0;
          for (int b = 0; b < n; ++b) {
            const std::size_t in_off = (static_cast<std::size_t>(b) * in_ + ic) * plane(ih, iw);
            const float* src = input_.data() + in_off;
            float* gsrc = grad_input.data() + in_off;
            const float* go = grad_output.data() + (static_cast<std::size_t>(b) * out_ + oc) * plane(oh, ow);
            for (int y = 0; y < oh; ++y) {
              const int iy = y + ky - padding_;
              if (iy < 0 || iy >= ih) continue;
              const std::size_t row_off = static_cast<std::size_t>(iy) * iw + (kx - padding_);
              const float* row = src + row_off;
              float* grow = gsrc + row_off;
              const float* go_row = go + static_cast<std::size_t>(y) * ow;
              float row_acc = 0.0f;
              for (int x = x0; x < x1; ++x) {
                row_acc += go_row[x] * row[x];
                grow[x] += k * go_row[x];
              }
              acc += row_acc;
            }
          }
          gw[wi] += static_cast<float>(acc);
        }
      }
    }
  }
  return grad_input;
}

// ReLU ----------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& input) {
  input_ = input;
  Tensor out = input;
  for (float& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor ReLU::backward(const Tensor& grad_output) {
  if (grad_output.shape() != input_.shape()) throw ShapeError("relu: gradient shape mismatch");
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input_[i] > 0.0f)) g[i] = 0.0f;
  return g;
}

// MaxPool2d -----------------------------------------------------------------

Shape MaxPool2d::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[1] % size_ != 0 || input[2] % size_ != 0 || input[1] < size_ || input[2] < size_)
    throw ShapeError("maxpool2d: input " + to_string(input) + " not divisible by " + std::to_string(size_));
  return {input[0], input[1] / size_, input[2] / size_};
}

nlohmann::json MaxPool2d::descriptor() const { return {{"type", type()}, {"size", size_}}; }

Tensor MaxPool2d::forward(const Tensor& input) {
  expect_rank(input, 4, "maxpool2d");
  const Shape os = output_shape({input.dim(1), input.dim(2), input.dim(3)});
  const int n = input.dim(0), c = input.dim(1), ih = input.dim(2), iw = input.dim(3);
  const int oh = os[1], ow = os[2];
  input_shape_ = input.shape();
  Tensor out({n, c, oh, ow});
  argmax_.assign(out.size(), 0);
  std::size_t o = 0;
  for (int p = 0; p < n * c; ++p) {
    const std::size_t base = static_cast<std::size_t>(p) * plane(ih, iw);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x, ++o) {
        std::size_t best = base + static_cast<std::size_t>(y * size_) * iw + x * size_;
        for (int dy = 0; dy < size_; ++dy) {
          for (int dx = 0; dx < size_; ++dx) {
            const std::size_t i = base + static_cast<std::size_t>(y * size_ + dy) * iw + (x * size_ + dx);
            if (input[i] > input[best]) best = i;
          }
        }
        out[o] = input[best];
        argmax_[o] = best;
      }
    }
  }
  return out;
}

Tensor MaxPool2d::backward(const Tensor& grad_output) {
  if (grad_output.size() != argmax_.size()) throw ShapeError("maxpool2d: gradient shape mismatch");
  Tensor g(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) g[argmax_[o]] += grad_output[o];
  return g;
}

// Flatten -------------------------------------------------------------------

Tensor Flatten::forward(const Tensor& input) {
  if (input.rank() < 2) throw ShapeError("flatten: expected a batch, got " + to_string(input.shape()));
  input_shape_ = input.shape();
  return input.reshaped({input.dim(0), static_cast<int>(input.size() / static_cast<std::size_t>(input.dim(0)))});
}

Tensor Flatten::backward(const Tensor& grad_output) { return grad_output.reshaped(input_shape_); }

// Dense ---------------------------------------------------------------------

Dense::Dense(int in_features, int out_features) : in_(in_features), out_(out_features) {
  if (in_ < 1 || out_ < 1) throw std::invalid_argument("dense: bad hyperparameters");
  weight_ = {"weight", Tensor({out_, in_}), Tensor({out_, in_})};
  bias_ = {"bias", Tensor({out_}), Tensor({out_})};
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_)
    throw ShapeError("dense: expected [" + std::to_string(in_) + "], got " + to_string(input));
  return {out_};
}

void Dense::initialize(Rng& rng) {
  glorot_uniform(weight_.value, in_, out_, rng);
  bias_.value.fill(0.0f);
}

nlohmann::json Dense::descriptor() const { return {{"type", type()}, {"in_features", in_}, {"out_features", out_}}; }

Tensor Dense::forward(const Tensor& input) {
  expect_rank(input, 2, "dense");
  output_shape({input.dim(1)});
  const int n = input.dim(0);
  input_ = input;
  Tensor out({n, out_});
  for (int b = 0; b < n; ++b) {
    const float* x = input.data() + static_cast<std::size_t>(b) * in_;
    for (int o = 0; o < out_; ++o) {
      const float* w = weight_.value.data() + static_cast<std::size_t>(o) * in_;
      double acc = bias_.value[o];
      for (int i = 0; i < in_; ++i) acc += static_cast<double>(w[i]) * x[i];
      out[static_cast<std::size_t>(b) * out_ + o] = static_cast<float>(acc);
    }
  }
  return out;
}

Tensor Dense::backward(const Tensor& grad_output) {
  const int n = input_.dim(0);
  if (grad_output.shape() != Shape{n, out_}) throw ShapeError("dense: gradient shape mismatch");
  Tensor grad_input(input_.shape());
  for (int o = 0; o < out_; ++o) {
    double gb = 0.0;
    for (int b = 0; b < n; ++b) gb += grad_output[static_cast<std::size_t>(b) * out_ + o];
    bias_.grad[o] += static_cast<float>(gb);
    float* gw = weight_.grad.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) {
      double acc = 0.0;
      for (int b = 0; b < n; ++b)
        acc += static_cast<double>(grad_output[static_cast<std::size_t>(b) * out_ + o]) * input_[static_cast<std::size_t>(b) * in_ + i];
      gw[i] += static_cast<float>(acc);
    }
  }
  for (int b = 0; b < n; ++b) {
    float* gx = grad_input.data() + static_cast<std::size_t>(b) * in_;
    for (int o = 0; o < out_; ++o) {
      const float g = grad_output[static_cast<std::size_t>(b) * out_ + o];
      const float* w = weight_.value.data() + static_cast<std::size_t>(o) * in_;
      for (int i = 0; i < in_; ++i) gx[i] += g * w[i];
    }
  }
  return grad_input;
}

std::unique_ptr<Layer> make_layer(const nlohmann::json& d) {
  const std::string type = d.at("type").get<std::string>();
  if (type == "conv2d") {
    if (d.value("stride", 1) != 1) throw std::invalid_argument("conv2d: only stride 1 is supported");
    return std::make_unique<Conv2d>(d.at("in_channels").get<int>(), d.at("out_channels").get<int>(),
                                    d.at("kernel").get<int>(), d.at("padding").get<int>());
  }
  if (type == "relu") return std::make_unique<ReLU>();
  if (type == "maxpool2d") return std::make_unique<MaxPool2d>(d.at("size").get<int>());
  if (type == "flatten") return std::make_unique<Flatten>();
  if (type == "dense") return std::make_unique<Dense>(d.at("in_features").get<int>(), d.at("out_features").get<int>());
  throw std::invalid_argument("unknown layer type '" + type + "'");
}

}  // namespace mts::nn
