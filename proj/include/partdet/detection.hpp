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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partdet/centers.hpp"
#include "partdet/discovery.hpp"
#include "partdet/gradmap.hpp"

namespace partdet {

struct PartDetection {
  int part_id = 0;
  Point2 position;
  bool occluded = true;
  std::size_t channel = 0;
  double cluster_weight = 0.0;

  friend bool operator==(const PartDetection&, const PartDetection&) = default;
};

enum class CenterMethod { gmm, max_position };

struct DetectOptions {
  CenterMethod method = CenterMethod::gmm;
  ColorReduction reduction = ColorReduction::max_abs;
  /// When set, gradient values outside the box are zeroed before fitting.
  std::optional<BoundingBox> restrict_to;
};

struct DetectionStats {
  std::size_t backward_passes = 0;
};

/// Zeroes map values at pixels outside the (closed) box.
GradientMap mask_outside_box(const GradientMap& map, const BoundingBox& box);

/// One detection per association, in association order. Channels shared by
/// several associations are back-propagated once.
std::vector<PartDetection> detect_parts(const Network& net, const Tensor& x, std::size_t layer,
                                        std::span<const ChannelAssociation> associations,
                                        const GmmConfig& cfg, const DetectOptions& options = {},
                                        DetectionStats* stats = nullptr);

struct ImageDetection {
  std::string image_id;
  PartDetection detection;
};

/// CSV `image_id,part_id,x,y,occluded`, coordinates with two decimals.
void write_detections(std::span<const ImageDetection> rows, std::ostream& out);
void write_detections(std::span<const ImageDetection> rows, const std::filesystem::path& path);
std::vector<ImageDetection> read_detections(std::istream& in, const std::string& name = "<stream>");
std::vector<ImageDetection> read_detections(const std::filesystem::path& path);

} // namespace partdet
