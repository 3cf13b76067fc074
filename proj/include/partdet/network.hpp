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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "partdet/tensor.hpp"

namespace partdet {

/// 2-D convolution over a (C, H, W) input. weight is (out, in, kh, kw).
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  Tensor weight;
  Tensor bias;
};

struct Relu {};

struct MaxPool {
  std::size_t window = 2;
  std::size_t stride = 2;
};

/// Fully connected layer over the flattened input. weight is (out, in).
struct Dense {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor weight;
  Tensor bias;
};

using Layer = std::variant<Conv2d, Relu, MaxPool, Dense>;

enum class LayerKind { convolution, relu, maxpool, dense };

LayerKind kind_of(const Layer& layer);
const char* kind_name(LayerKind kind);

/// Conv2d with zero-initialized parameters of the declared extents.
Conv2d make_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                 std::size_t stride = 1, std::size_t pad = 0);
Dense make_dense(std::size_t in_features, std::size_t out_features);

/// Initialization of the backward pass at the output of `layer`.
struct SeedVector {
  std::size_t layer = 0;
  std::vector<double> values;
};

/// Per-layer parameter gradients, empty tensors for parameter-free layers.
struct ParamGrads {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;
};

/// Ordered layer stack g(x) = f_n(...f_1(x)). Layer indices are 0-based:
/// forward(x)[k] is the output of layers()[k].
class Network {
public:
  Network(Shape input_shape, std::vector<Layer> layers);

  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(std::size_t k) const { return layers_.at(k); }
  const Shape& output_shape(std::size_t k) const { return shapes_.at(k); }
  std::size_t output_size(std::size_t k) const { return shape_size(shapes_.at(k)); }
  std::size_t num_classes() const { return output_size(layers_.size() - 1); }

  /// Channel count of a layer with (C, H, W) output.
  std::size_t channels(std::size_t k) const;
  bool has_channels(std::size_t k) const { return shapes_.at(k).size() == 3; }

  std::optional<std::size_t> last_pool_layer() const;
  /// Last layer before the final one, i.e. the last hidden layer.
  std::size_t last_hidden_layer() const;

  /// All layer outputs. Throws InvalidInput on shape mismatch.
  std::vector<Tensor> forward(const Tensor& x) const;
  /// Outputs of layers 0..last only.
  std::vector<Tensor> forward_to(const Tensor& x, std::size_t last) const;

  /// seed^T * d g_b / d x, same shape as x.
  Tensor backward_seeded(const Tensor& x, const SeedVector& seed) const;
  /// Same, reusing precomputed forward outputs (at least up to seed.layer).
  Tensor backward_seeded(const Tensor& x, std::span<const Tensor> outputs,
                         const SeedVector& seed) const;

  /// Back-propagates grad_out (gradient w.r.t. the output of layer `from`)
  /// down to the input. If grads is set, parameter gradients are
  /// accumulated into it. If need_input is false the input gradient of
  /// layer 0 is skipped and an empty tensor is returned.
  Tensor backprop(const Tensor& x, std::span<const Tensor> outputs, std::size_t from,
                  Tensor grad_out, ParamGrads* grads, bool need_input = true) const;

  ParamGrads zero_grads() const;

  /// Mutable parameter views, in layer order (weight then bias).
  std::vector<std::span<double>> parameter_views();
  std::vector<std::span<const double>> parameter_views() const;
  std::size_t parameter_count() const;

  friend bool operator==(const Network& a, const Network& b);

private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
};

/// Seed that is 1 on every element of channel `channel` of layer `layer`.
SeedVector channel_seed(const Network& net, std::size_t layer, std::size_t channel);
/// Unit seed e_j on flat element `element` of layer `layer`.
SeedVector unit_seed(const Network& net, std::size_t layer, std::size_t element);

/// Desk-scale stand-in for a pretrained image network:
/// conv(C->c1, k, pad k/2)-relu-maxpool2 -> conv(c1->c2, k, pad k/2)-relu-maxpool2
/// -> dense -> classes.
struct ReferenceNetConfig {
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 32;
  std::size_t kernel = 5;
  std::size_t num_classes = 4;
};

/// Random He-style initialization. Parameter values are rounded to single
/// precision so that saved weights reload bit-exactly.
Network make_reference_network(const ReferenceNetConfig& cfg, std::uint64_t seed);

/// Re-initializes all parameters of `net` at random (float-representable).
void randomize_parameters(Network& net, std::uint64_t seed, double bias_scale = 0.0);

} // namespace partdet
