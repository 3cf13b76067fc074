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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partdet/centers.hpp"
#include "partdet/network.hpp"

namespace partdet {

struct PartAnnotation {
  std::string image_id;
  int part_id = 0;
  Point2 position;
  bool visible = true;
};

/// Axis-aligned box [x, x + width] x [y, y + height], edges inclusive.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool valid() const { return width > 0.0 && height > 0.0; }
  bool contains(const Point2& p) const;
  /// Euclidean distance to the nearest point of the box, 0 inside.
  double distance(const Point2& p) const;
  double diagonal() const;
};

enum class Strategy { part, counting, bbox };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

/// Part (or proposal rank, for the unsupervised strategies) -> channel.
struct ChannelAssociation {
  int part_id = 0;
  std::size_t channel = 0;
  double score = 0.0;
  Strategy strategy = Strategy::part;

  friend bool operator==(const ChannelAssociation&, const ChannelAssociation&) = default;
};

/// Activation centers for every (image, channel) pair of one layer.
class CenterTable {
public:
  CenterTable() = default;
  CenterTable(std::vector<std::string> image_ids, std::size_t channels, std::size_t height,
              std::size_t width);

  std::size_t num_images() const noexcept { return image_ids_.size(); }
  std::size_t num_channels() const noexcept { return channels_; }
  std::size_t image_height() const noexcept { return height_; }
  std::size_t image_width() const noexcept { return width_; }
  double image_diagonal() const;
  const std::vector<std::string>& image_ids() const noexcept { return image_ids_; }

  ActivationCenter& at(std::size_t image, std::size_t channel) {
    return entries_[image * channels_ + channel];
  }
  const ActivationCenter& at(std::size_t image, std::size_t channel) const {
    return entries_[image * channels_ + channel];
  }

  friend bool operator==(const CenterTable&, const CenterTable&) = default;

private:
  std::vector<std::string> image_ids_;
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<ActivationCenter> entries_;
};

/// GMM activation center of every channel gradient map of `layer` for
/// every image. One forward pass per image and one backward pass per
/// (image, channel).
CenterTable compute_center_table(const Network& net, std::span<const Tensor> images,
                                 std::span<const std::string> image_ids, std::size_t layer,
                                 const GmmConfig& cfg);

/// Channels usable on fewer than this fraction of images are disqualified.
inline constexpr double kMinUsableFraction = 0.25;

/// Supervised selection. `positions[i]` is the annotated location of the
/// part on table image i, or nullopt when it is not visible. The channel
/// with the smallest sum of squared distances over images where both the
/// part and the center are present wins; lowest index on ties. Channels
/// usable on fewer than 25% of the part-visible images are skipped. The
/// score is the mean squared distance over the images used.
ChannelAssociation select_channel_part(const CenterTable& table,
                                       std::span<const std::optional<Point2>> positions,
                                       int part_id);

/// The `proposals` channels whose centers most often fall inside the box.
std::vector<ChannelAssociation> select_channels_counting(const CenterTable& table,
                                                         std::span<const BoundingBox> boxes,
                                                         std::size_t proposals);

/// The `proposals` channels with the lowest summed distance to the box;
/// an occluded center costs the image diagonal.
std::vector<ChannelAssociation> select_channels_bbox(const CenterTable& table,
                                                     std::span<const BoundingBox> boxes,
                                                     std::size_t proposals);

/// CSV `part_id,channel,score,strategy`.
void write_associations(std::span<const ChannelAssociation> assoc, std::ostream& out);
void write_associations(std::span<const ChannelAssociation> assoc, const std::filesystem::path& path);
std::vector<ChannelAssociation> read_associations(std::istream& in, const std::string& name = "<stream>");
std::vector<ChannelAssociation> read_associations(const std::filesystem::path& path);

} // namespace partdet
