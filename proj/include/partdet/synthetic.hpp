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
#include <filesystem>
#include <vector>

#include "partdet/dataset.hpp"
#include "partdet/tensor.hpp"

namespace partdet {

enum class SyntheticVariant {
  /// Class = combination of part shapes (solid square or ring per part).
  shapes,
  /// Part shapes are random; class = color of a small mark inside part 0.
  fine_grained,
};

/// Procedural "creatures": a grey elliptic body with colored parts spaced
/// along its major axis on a noisy background. Part j has its own color;
/// ground-truth part positions are the shape centers and the box encloses
/// body and parts.
struct SyntheticSpec {
  std::size_t image_size = 64;
  std::size_t num_classes = 4;
  std::size_t num_parts = 2;
  std::size_t train_count = 400;
  std::size_t test_count = 100;
  std::uint64_t seed = 0;
  SyntheticVariant variant = SyntheticVariant::shapes;

  void validate() const;
};

struct SyntheticSample {
  Tensor image; // (3, S, S) quantized to 8-bit levels
  int label = 0;
  std::vector<Point2> part_centers;
  std::vector<int> part_shapes; // 0 square, 1 ring
  double part_radius = 0.0;
  BoundingBox box;
};

/// Sample `index` of the spec; independent of generation order.
SyntheticSample render_sample(const SyntheticSpec& spec, std::size_t index);

/// Part color used for part j (RGB in [0, 1]).
std::vector<double> part_color(std::size_t part);
/// Mark colors distinguishing fine-grained classes.
std::vector<double> mark_color(std::size_t cls);

/// Writes images/*.ppm, the four tables and `manifest.txt` into `dir`.
/// Returns the manifest path.
std::filesystem::path generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

} // namespace partdet
