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
#include <string>
#include <vector>

#include "partdet/network.hpp"

namespace partdet {

/// Maps with max |value| below this are treated as all-zero (occlusion).
inline constexpr double kZeroMapTolerance = 1e-12;

/// How the color axis of an input gradient collapses to one value per pixel.
enum class ColorReduction { max_abs, sum_abs };

/// Non-negative H x W map of input-gradient magnitudes, row-major.
struct GradientMap {
  std::string image_id;
  int source = -1; // channel index, or class index for class maps
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  bool is_zero() const;

  friend bool operator==(const GradientMap&, const GradientMap&) = default;
};

/// Collapses a (C, H, W) gradient to a magnitude map. (H, W) and flat (N)
/// gradients are treated as a single channel; a flat one becomes 1 x N.
GradientMap reduce_gradient(const Tensor& grad, ColorReduction reduction);

/// |reduce(backward with s_c)|: one backward pass for the whole channel.
GradientMap channel_gradient_map(const Network& net, const Tensor& x, std::size_t layer,
                                 std::size_t channel,
                                 ColorReduction reduction = ColorReduction::max_abs);
/// Same as above but reuses forward outputs computed up to at least `layer`.
GradientMap channel_gradient_map(const Network& net, const Tensor& x,
                                 std::span<const Tensor> outputs, std::size_t layer,
                                 std::size_t channel,
                                 ColorReduction reduction = ColorReduction::max_abs);

/// Magnitude of d score_class / d x. Without a class, the argmax class of
/// the forward scores is used.
GradientMap class_gradient_map(const Network& net, const Tensor& x,
                               std::optional<std::size_t> class_id = std::nullopt,
                               ColorReduction reduction = ColorReduction::max_abs);

/// Binary mask (row-major, 0/1) marking values >= the nearest-rank
/// q-quantile, i.e. the ceil(q * N)-th smallest value.
std::vector<std::uint8_t> threshold_map(const GradientMap& map, double q);
double nearest_rank_quantile(std::vector<double> values, double q);

/// Rescales to unit sum. Returns nullopt for an all-zero map.
std::optional<GradientMap> normalize_map(const GradientMap& map);

} // namespace partdet
