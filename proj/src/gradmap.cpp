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

#include "partdet/gradmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "partdet/error.hpp"

namespace partdet {

bool GradientMap::is_zero() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::abs(v) < kZeroMapTolerance; });
}

GradientMap reduce_gradient(const Tensor& grad, ColorReduction reduction) {
  // flat inputs are one row, single-channel inputs (H, W) one plane
  if (grad.rank() < 1 || grad.rank() > 3) throw InvalidInput("input gradient must be (C, H, W), (H, W) or (N)");
  const std::size_t C = grad.rank() == 3 ? grad.extent(0) : 1;
  const std::size_t H = grad.rank() == 1 ? 1 : grad.extent(grad.rank() - 2);
  const std::size_t W = grad.extent(grad.rank() - 1);
  GradientMap map;
  map.height = H;
  map.width = W;
  map.values.assign(H * W, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < H * W; ++i) {
      const double v = std::abs(grad[c * H * W + i]);
      if (reduction == ColorReduction::max_abs)
        map.values[i] = std::max(map.values[i], v);
      else
        map.values[i] += v;
    }
  return map;
}

GradientMap channel_gradient_map(const Network& net, const Tensor& x, std::size_t layer,
                                 std::size_t channel, ColorReduction reduction) {
  if (layer >= net.num_layers()) throw InvalidInput("layer " + std::to_string(layer) + " does not exist");
  const auto outs = net.forward_to(x, layer);
  return channel_gradient_map(net, x, outs, layer, channel, reduction);
}

GradientMap channel_gradient_map(const Network& net, const Tensor& x,
                                 std::span<const Tensor> outputs, std::size_t layer,
                                 std::size_t channel, ColorReduction reduction) {
  const auto seed = channel_seed(net, layer, channel);
  GradientMap map = reduce_gradient(net.backward_seeded(x, outputs, seed), reduction);
  map.source = static_cast<int>(channel);
  return map;
}

GradientMap class_gradient_map(const Network& net, const Tensor& x,
                               std::optional<std::size_t> class_id, ColorReduction reduction) {
  const auto outs = net.forward(x);
  const auto scores = outs.back().data();
  std::size_t cls = 0;
  if (class_id) {
    if (*class_id >= scores.size())
      throw InvalidInput("class " + std::to_string(*class_id) + " out of range (" +
                         std::to_string(scores.size()) + " classes)");
    cls = *class_id;
  } else {
    cls = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }
  const std::size_t last = net.num_layers() - 1;
  GradientMap map = reduce_gradient(net.backward_seeded(x, outs, unit_seed(net, last, cls)), reduction);
  map.source = static_cast<int>(cls);
  return map;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of an empty map");
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("quantile must lie in (0, 1)");
  const double n = static_cast<double>(values.size());
  // tolerance absorbs q * N landing a hair above an integer, e.g. 0.95 * 100
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

std::vector<std::uint8_t> threshold_map(const GradientMap& map, double q) {
  const double cut = nearest_rank_quantile(map.values, q);
  std::vector<std::uint8_t> mask(map.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = map.values[i] >= cut ? 1 : 0;
  return mask;
}

std::optional<GradientMap> normalize_map(const GradientMap& map) {
  if (map.values.empty() || map.is_zero()) return std::nullopt;
  double total = 0.0;
  for (double v : map.values) total += std::abs(v);
  GradientMap out = map;
  for (auto& v : out.values) v = std::abs(v) / total;
  return out;
}

} // namespace partdet
