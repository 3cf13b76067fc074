/*
 * Copyright 2026 The partdet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "partdet/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "partdet/error.hpp"
#include "partdet/random.hpp"

namespace partdet {
namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

std::string layer_tag(std::size_t k) { return "layer " + std::to_string(k); }

Shape infer_shape(const Layer& layer, const Shape& in, std::size_t k) {
  return std::visit(
      overloaded{
          [&](const Conv2d& c) -> Shape {
            if (in.size() != 3 || in[0] != c.in_channels)
              throw InvalidInput(layer_tag(k) + ": convolution expects " +
                                 std::to_string(c.in_channels) + " input channels");
            if (c.stride == 0 || c.kernel_h == 0 || c.kernel_w == 0)
              throw InvalidInput(layer_tag(k) + ": bad convolution geometry");
            if (c.weight.shape() != Shape{c.out_channels, c.in_channels, c.kernel_h, c.kernel_w} ||
                c.bias.shape() != Shape{c.out_channels})
              throw InvalidInput(layer_tag(k) + ": convolution parameter extents mismatch");
            const std::size_t ph = in[1] + 2 * c.pad, pw = in[2] + 2 * c.pad;
            if (ph < c.kernel_h || pw < c.kernel_w)
              throw InvalidInput(layer_tag(k) + ": input smaller than filter");
            return {c.out_channels, (ph - c.kernel_h) / c.stride + 1,
                    (pw - c.kernel_w) / c.stride + 1};
          },
          [&](const Relu&) -> Shape { return in; },
          [&](const MaxPool& p) -> Shape {
            if (in.size() != 3) throw InvalidInput(layer_tag(k) + ": pooling needs (C, H, W) input");
            if (p.window == 0 || p.stride == 0 || in[1] < p.window || in[2] < p.window)
              throw InvalidInput(layer_tag(k) + ": bad pooling geometry");
            return {in[0], (in[1] - p.window) / p.stride + 1, (in[2] - p.window) / p.stride + 1};
          },
          [&](const Dense& d) -> Shape {
            if (shape_size(in) != d.in_features)
              throw InvalidInput(layer_tag(k) + ": dense layer expects " +
                                 std::to_string(d.in_features) + " inputs");
            if (d.weight.shape() != Shape{d.out_features, d.in_features} ||
                d.bias.shape() != Shape{d.out_features})
              throw InvalidInput(layer_tag(k) + ": dense parameter extents mismatch");
            return {d.out_features};
          },
      },
      layer);
}

// Valid output index range [lo, hi) for one kernel tap along one axis.
struct Range {
  std::size_t lo, hi;
};

Range tap_range(std::size_t out_extent, std::size_t in_extent, std::size_t tap,
                std::size_t stride, std::size_t pad) {
  // in = o * stride + tap - pad must lie in [0, in_extent)
  const long long t = static_cast<long long>(tap) - static_cast<long long>(pad);
  const long long s = static_cast<long long>(stride);
  long long lo = t >= 0 ? 0 : (-t + s - 1) / s;
  long long hi_in = static_cast<long long>(in_extent) - 1 - t; // o * s <= hi_in
  long long hi = hi_in < 0 ? 0 : hi_in / s + 1;
  hi = std::min(hi, static_cast<long long>(out_extent));
  if (lo > hi) lo = hi;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Unfolds the input into a (in_channels * kh * kw) x (OH * OW) matrix,
// zero where the tap falls into padding.
RowMatrix im2col(const Conv2d& c, const Tensor& in, std::size_t OH, std::size_t OW) {
  const std::size_t H = in.extent(1), W = in.extent(2);
  RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(c.in_channels * c.kernel_h * c.kernel_w),
                                   static_cast<Eigen::Index>(OH * OW));
  const double* src = in.data().data();
  for (std::size_t ic = 0; ic < c.in_channels; ++ic)
    for (std::size_t ky = 0; ky < c.kernel_h; ++ky) {
      const Range ry = tap_range(OH, H, ky, c.stride, c.pad);
      for (std::size_t kx = 0; kx < c.kernel_w; ++kx) {
        const Range rx = tap_range(OW, W, kx, c.stride, c.pad);
        double* row = cols.data() + ((ic * c.kernel_h + ky) * c.kernel_w + kx) * OH * OW;
        for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
          const double* in_row = src + (ic * H + oy * c.stride + ky - c.pad) * W + kx - c.pad;
          double* out_row = row + oy * OW;
          for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) out_row[ox] = in_row[ox * c.stride];
        }
      }
    }
  return cols;
}

// Scatter-adds an unfolded gradient back onto the input grid.
void col2im(const Conv2d& c, const RowMatrix& cols, std::size_t OH, std::size_t OW, Tensor& grad_in) {
  const std::size_t H = grad_in.extent(1), W = grad_in.extent(2);
  double* dst = grad_in.data().data();
  for (std::size_t ic = 0; ic < c.in_channels; ++ic)
    for (std::size_t ky = 0; ky < c.kernel_h; ++ky) {
      const Range ry = tap_range(OH, H, ky, c.stride, c.pad);
      for (std::size_t kx = 0; kx < c.kernel_w; ++kx) {
        const Range rx = tap_range(OW, W, kx, c.stride, c.pad);
        const double* row = cols.data() + ((ic * c.kernel_h + ky) * c.kernel_w + kx) * OH * OW;
        for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
          double* in_row = dst + (ic * H + oy * c.stride + ky - c.pad) * W + kx - c.pad;
          const double* g_row = row + oy * OW;
          for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) in_row[ox * c.stride] += g_row[ox];
        }
      }
    }
}

Eigen::Index rows_of(const Conv2d& c) { return static_cast<Eigen::Index>(c.out_channels); }
Eigen::Index taps_of(const Conv2d& c) {
  return static_cast<Eigen::Index>(c.in_channels * c.kernel_h * c.kernel_w);
}

void conv_forward(const Conv2d& c, const Tensor& in, Tensor& out) {
  const std::size_t OH = out.extent(1), OW = out.extent(2);
  const auto n = static_cast<Eigen::Index>(OH * OW);
  const RowMatrix cols = im2col(c, in, OH, OW);
  ConstMatrixMap w(c.weight.data().data(), rows_of(c), taps_of(c));
  MatrixMap o(out.data().data(), rows_of(c), n);
  o.noalias() = w * cols;
  for (std::size_t oc = 0; oc < c.out_channels; ++oc) o.row(static_cast<Eigen::Index>(oc)).array() += c.bias[oc];
}

// grad_in may be null (skip data gradient), grads may be null (skip parameters).
void conv_backward(const Conv2d& c, const Tensor& in, const Tensor& grad_out, Tensor* grad_in,
                   Tensor* grad_w, Tensor* grad_b) {
  const std::size_t OH = grad_out.extent(1), OW = grad_out.extent(2);
  const auto n = static_cast<Eigen::Index>(OH * OW);
  ConstMatrixMap g(grad_out.data().data(), rows_of(c), n);
  if (grad_b)
    for (std::size_t oc = 0; oc < c.out_channels; ++oc) (*grad_b)[oc] += g.row(static_cast<Eigen::Index>(oc)).sum();
  if (grad_w) {
    const RowMatrix cols = im2col(c, in, OH, OW);
    MatrixMap gw(grad_w->data().data(), rows_of(c), taps_of(c));
    gw.noalias() += g * cols.transpose();
  }
  if (grad_in) {
    ConstMatrixMap w(c.weight.data().data(), rows_of(c), taps_of(c));
    const RowMatrix gcols = w.transpose() * g;
    col2im(c, gcols, OH, OW, *grad_in);
  }
}

void pool_forward(const MaxPool& p, const Tensor& in, Tensor& out) {
  const std::size_t C = in.extent(0), H = in.extent(1), W = in.extent(2);
  const std::size_t OH = out.extent(1), OW = out.extent(2);
  (void)H;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double best = in.at(c, oy * p.stride, ox * p.stride);
        for (std::size_t dy = 0; dy < p.window; ++dy)
          for (std::size_t dx = 0; dx < p.window; ++dx)
            best = std::max(best, in.at(c, oy * p.stride + dy, ox * p.stride + dx));
        out.at(c, oy, ox) = best;
      }
  (void)W;
}

// Routes each output gradient to the first (lowest flat index) maximum.
void pool_backward(const MaxPool& p, const Tensor& in, const Tensor& grad_out, Tensor& grad_in) {
  const std::size_t C = in.extent(0);
  const std::size_t OH = grad_out.extent(1), OW = grad_out.extent(2);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        const double g = grad_out.at(c, oy, ox);
        if (g == 0.0) continue;
        std::size_t by = oy * p.stride, bx = ox * p.stride;
        double best = in.at(c, by, bx);
        for (std::size_t dy = 0; dy < p.window; ++dy)
          for (std::size_t dx = 0; dx < p.window; ++dx) {
            const double v = in.at(c, oy * p.stride + dy, ox * p.stride + dx);
            if (v > best) {
              best = v;
              by = oy * p.stride + dy;
              bx = ox * p.stride + dx;
            }
          }
        grad_in.at(c, by, bx) += g;
      }
}

void dense_forward(const Dense& d, const Tensor& in, Tensor& out) {
  const double* x = in.data().data();
  const double* w = d.weight.data().data();
  for (std::size_t o = 0; o < d.out_features; ++o) {
    const double* row = w + o * d.in_features;
    double s = 0.0;
    for (std::size_t i = 0; i < d.in_features; ++i) s += row[i] * x[i];
    out[o] = d.bias[o] + s;
  }
}

void dense_backward(const Dense& d, const Tensor& in, const Tensor& grad_out, Tensor* grad_in,
                    Tensor* grad_w, Tensor* grad_b) {
  const double* x = in.data().data();
  const double* w = d.weight.data().data();
  for (std::size_t o = 0; o < d.out_features; ++o) {
    const double g = grad_out[o];
    if (grad_b) (*grad_b)[o] += g;
    if (g == 0.0) continue;
    const double* row = w + o * d.in_features;
    if (grad_in) {
      double* gi = grad_in->data().data();
      for (std::size_t i = 0; i < d.in_features; ++i) gi[i] += g * row[i];
    }
    if (grad_w) {
      double* gw = grad_w->data().data() + o * d.in_features;
      for (std::size_t i = 0; i < d.in_features; ++i) gw[i] += g * x[i];
    }
  }
}

float to_float_checked(double v) { return static_cast<float>(v); }

} // namespace

LayerKind kind_of(const Layer& layer) {
  return static_cast<LayerKind>(layer.index());
}

const char* kind_name(LayerKind kind) {
  switch (kind) {
  case LayerKind::convolution: return "convolution";
  case LayerKind::relu: return "relu";
  case LayerKind::maxpool: return "maxpool";
  case LayerKind::dense: return "dense";
  }
  return "?";
}

Conv2d make_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                 std::size_t stride, std::size_t pad) {
  Conv2d c;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.kernel_h = c.kernel_w = kernel;
  c.stride = stride;
  c.pad = pad;
  c.weight = Tensor({out_channels, in_channels, kernel, kernel});
  c.bias = Tensor({out_channels});
  return c;
}

Dense make_dense(std::size_t in_features, std::size_t out_features) {
  Dense d;
  d.in_features = in_features;
  d.out_features = out_features;
  d.weight = Tensor({out_features, in_features});
  d.bias = Tensor({out_features});
  return d;
}

Network::Network(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidInput("network needs at least one layer");
  if (input_shape_.empty() || shape_size(input_shape_) == 0)
    throw InvalidInput("network input shape must be non-empty");
  Shape cur = input_shape_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    cur = infer_shape(layers_[k], cur, k);
    shapes_.push_back(cur);
  }
}

std::size_t Network::channels(std::size_t k) const {
  if (!has_channels(k))
    throw InvalidInput(layer_tag(k) + " output is not channel-organized");
  return shapes_[k][0];
}

std::optional<std::size_t> Network::last_pool_layer() const {
  for (std::size_t k = layers_.size(); k-- > 0;)
    if (kind_of(layers_[k]) == LayerKind::maxpool) return k;
  return std::nullopt;
}

std::size_t Network::last_hidden_layer() const {
  if (layers_.size() < 2) throw InvalidInput("network has no hidden layer");
  return layers_.size() - 2;
}

std::vector<Tensor> Network::forward(const Tensor& x) const {
  return forward_to(x, layers_.size() - 1);
}

std::vector<Tensor> Network::forward_to(const Tensor& x, std::size_t last) const {
  if (x.shape() != input_shape_) throw InvalidInput("input shape does not match network input");
  if (last >= layers_.size()) throw InvalidInput(layer_tag(last) + " does not exist");
  std::vector<Tensor> outs;
  outs.reserve(last + 1);
  for (std::size_t k = 0; k <= last; ++k) {
    const Tensor& in = k == 0 ? x : outs[k - 1];
    Tensor out(shapes_[k]);
    std::visit(overloaded{
                   [&](const Conv2d& c) { conv_forward(c, in, out); },
                   [&](const Relu&) {
                     for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
                   },
                   [&](const MaxPool& p) { pool_forward(p, in, out); },
                   [&](const Dense& d) { dense_forward(d, in, out); },
               },
               layers_[k]);
    outs.push_back(std::move(out));
  }
  return outs;
}

Tensor Network::backward_seeded(const Tensor& x, const SeedVector& seed) const {
  if (seed.layer >= layers_.size()) throw InvalidInput(layer_tag(seed.layer) + " does not exist");
  const auto outs = forward_to(x, seed.layer);
  return backward_seeded(x, outs, seed);
}

Tensor Network::backward_seeded(const Tensor& x, std::span<const Tensor> outputs,
                                const SeedVector& seed) const {
  if (seed.layer >= layers_.size()) throw InvalidInput(layer_tag(seed.layer) + " does not exist");
  if (seed.values.size() != output_size(seed.layer))
    throw InvalidInput("seed length " + std::to_string(seed.values.size()) +
                       " does not match output size " + std::to_string(output_size(seed.layer)) +
                       " of " + layer_tag(seed.layer));
  if (outputs.size() <= seed.layer) throw InvalidInput("missing forward outputs for seed layer");
  return backprop(x, outputs, seed.layer, Tensor(shapes_[seed.layer], seed.values), nullptr);
}

Tensor Network::backprop(const Tensor& x, std::span<const Tensor> outputs, std::size_t from,
                         Tensor grad, ParamGrads* grads, bool need_input) const {
  for (std::size_t k = from + 1; k-- > 0;) {
    const Tensor& in = k == 0 ? x : outputs[k - 1];
    const bool want_in = k > 0 || need_input;
    Tensor gin = want_in ? Tensor(in.shape()) : Tensor();
    std::visit(overloaded{
                   [&](const Conv2d& c) {
                     conv_backward(c, in, grad, want_in ? &gin : nullptr,
                                   grads ? &grads->weight[k] : nullptr,
                                   grads ? &grads->bias[k] : nullptr);
                   },
                   [&](const Relu&) {
                     if (want_in)
                       for (std::size_t i = 0; i < in.size(); ++i) gin[i] = in[i] > 0.0 ? grad[i] : 0.0;
                   },
                   [&](const MaxPool& p) {
                     if (want_in) pool_backward(p, in, grad, gin);
                   },
                   [&](const Dense& d) {
                     dense_backward(d, in, grad, want_in ? &gin : nullptr,
                                    grads ? &grads->weight[k] : nullptr,
                                    grads ? &grads->bias[k] : nullptr);
                   },
               },
               layers_[k]);
    grad = std::move(gin);
  }
  return grad;
}

ParamGrads Network::zero_grads() const {
  ParamGrads g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (const auto* c = std::get_if<Conv2d>(&layers_[k])) {
      g.weight[k] = Tensor(c->weight.shape());
      g.bias[k] = Tensor(c->bias.shape());
    } else if (const auto* d = std::get_if<Dense>(&layers_[k])) {
      g.weight[k] = Tensor(d->weight.shape());
      g.bias[k] = Tensor(d->bias.shape());
    }
  }
  return g;
}

std::vector<std::span<double>> Network::parameter_views() {
  std::vector<std::span<double>> views;
  for (auto& layer : layers_) {
    if (auto* c = std::get_if<Conv2d>(&layer)) {
      views.push_back(c->weight.data());
      views.push_back(c->bias.data());
    } else if (auto* d = std::get_if<Dense>(&layer)) {
      views.push_back(d->weight.data());
      views.push_back(d->bias.data());
    }
  }
  return views;
}

std::vector<std::span<const double>> Network::parameter_views() const {
  std::vector<std::span<const double>> views;
  for (auto v : const_cast<Network*>(this)->parameter_views()) views.emplace_back(v);
  return views;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (auto v : parameter_views()) n += v.size();
  return n;
}

bool operator==(const Network& a, const Network& b) {
  if (a.input_shape_ != b.input_shape_ || a.shapes_ != b.shapes_ ||
      a.layers_.size() != b.layers_.size())
    return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k)
    if (a.layers_[k].index() != b.layers_[k].index()) return false;
  auto va = a.parameter_views();
  auto vb = b.parameter_views();
  for (std::size_t i = 0; i < va.size(); ++i)
    if (!std::equal(va[i].begin(), va[i].end(), vb[i].begin(), vb[i].end())) return false;
  return true;
}

SeedVector channel_seed(const Network& net, std::size_t layer, std::size_t channel) {
  const std::size_t C = net.channels(layer);
  if (channel >= C)
    throw InvalidInput("channel " + std::to_string(channel) + " out of range for " +
                       layer_tag(layer) + " with " + std::to_string(C) + " channels");
  SeedVector s{layer, std::vector<double>(net.output_size(layer), 0.0)};
  const std::size_t plane = net.output_size(layer) / C;
  std::fill_n(s.values.begin() + static_cast<std::ptrdiff_t>(channel * plane), plane, 1.0);
  return s;
}

SeedVector unit_seed(const Network& net, std::size_t layer, std::size_t element) {
  if (layer >= net.num_layers()) throw InvalidInput(layer_tag(layer) + " does not exist");
  if (element >= net.output_size(layer)) throw InvalidInput("seed element out of range");
  SeedVector s{layer, std::vector<double>(net.output_size(layer), 0.0)};
  s.values[element] = 1.0;
  return s;
}

void randomize_parameters(Network& net, std::uint64_t seed, double bias_scale) {
  Rng rng(seed);
  std::vector<Layer> layers = net.layers();
  for (auto& layer : layers) {
    auto init = [&](Tensor& w, Tensor& b, std::size_t fan_in) {
      const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (auto& v : w.values()) v = to_float_checked(rng.normal() * scale);
      for (auto& v : b.values()) v = to_float_checked(bias_scale * rng.normal());
    };
    if (auto* c = std::get_if<Conv2d>(&layer))
      init(c->weight, c->bias, c->in_channels * c->kernel_h * c->kernel_w);
    else if (auto* d = std::get_if<Dense>(&layer))
      init(d->weight, d->bias, d->in_features);
  }
  net = Network(net.input_shape(), std::move(layers));
}

Network make_reference_network(const ReferenceNetConfig& cfg, std::uint64_t seed) {
  const std::size_t pad = cfg.kernel / 2;
  std::vector<Layer> layers;
  layers.emplace_back(make_conv(cfg.channels, cfg.conv1_channels, cfg.kernel, 1, pad));
  layers.emplace_back(Relu{});
  layers.emplace_back(MaxPool{2, 2});
  layers.emplace_back(make_conv(cfg.conv1_channels, cfg.conv2_channels, cfg.kernel, 1, pad));
  layers.emplace_back(Relu{});
  layers.emplace_back(MaxPool{2, 2});
  // Shapes through the two same-padded convolutions and 2x2 pools.
  const std::size_t h = cfg.height / 2 / 2, w = cfg.width / 2 / 2;
  layers.emplace_back(make_dense(cfg.conv2_channels * h * w, cfg.num_classes));
  Network net({cfg.channels, cfg.height, cfg.width}, std::move(layers));
  randomize_parameters(net, seed);
  return net;
}

} // namespace partdet
