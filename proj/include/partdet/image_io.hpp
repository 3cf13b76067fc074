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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "partdet/gradmap.hpp"
#include "partdet/tensor.hpp"

namespace partdet {

/// 8-bit raster as stored on disk: `channels` is 1 (PGM) or 3 (PPM),
/// pixels interleaved row-major.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// Reads binary P5/P6 with maxval 255 (comments allowed in the header).
Raster read_pnm(std::istream& in, const std::string& name = "<stream>");
Raster read_pnm(const std::filesystem::path& path);
void write_pnm(const Raster& raster, std::ostream& out);
void write_pnm(const Raster& raster, const std::filesystem::path& path);

/// (C, H, W) tensor in [0, 1] <-> raster. Values are clamped and rounded.
Tensor raster_to_tensor(const Raster& raster);
Raster tensor_to_raster(const Tensor& image);

Tensor read_image(const std::filesystem::path& path);
void write_image(const Tensor& image, const std::filesystem::path& path);

/// Grayscale heatmap with map maximum -> 255 (all-zero map -> all 0).
Raster heatmap_raster(const GradientMap& map);
/// Input image with masked pixels painted red.
Raster overlay_raster(const Tensor& image, std::span<const std::uint8_t> mask);

/// Bilinear resampling with corner-aligned sampling grids. Equal sizes
/// return an exact copy.
Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width);

} // namespace partdet
