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

#include "partdet/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "partdet/csv.hpp"
#include "partdet/error.hpp"
#include "partdet/gradmap.hpp"
#include "partdet/parallel.hpp"

namespace partdet {
namespace {

void check_boxes(const CenterTable& table, std::span<const BoundingBox> boxes, std::size_t proposals) {
  if (boxes.size() != table.num_images())
    throw InvalidInput("need one bounding box per table image (" +
                       std::to_string(table.num_images()) + "), got " + std::to_string(boxes.size()));
  for (const auto& b : boxes)
    if (!b.valid()) throw InvalidInput("bounding box with non-positive extent");
  if (proposals < 1) throw InvalidInput("proposal count must be at least 1");
  if (proposals > table.num_channels())
    throw InvalidInput("proposal count " + std::to_string(proposals) + " exceeds channel count " +
                       std::to_string(table.num_channels()));
}

// Indices of the `count` best channels; `better(a, b)` on scores, ties by index.
template <typename Better>
std::vector<std::size_t> top_channels(const std::vector<double>& score, std::size_t count, Better better) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return better(score[a], score[b]); });
  idx.resize(count);
  return idx;
}

} // namespace

bool BoundingBox::contains(const Point2& p) const {
  return p.x >= x && p.x <= x + width && p.y >= y && p.y <= y + height;
}

double BoundingBox::distance(const Point2& p) const {
  const double dx = std::max({x - p.x, 0.0, p.x - (x + width)});
  const double dy = std::max({y - p.y, 0.0, p.y - (y + height)});
  return std::hypot(dx, dy);
}

double BoundingBox::diagonal() const { return std::hypot(width, height); }

const char* strategy_name(Strategy s) {
  switch (s) {
  case Strategy::part: return "part";
  case Strategy::counting: return "counting";
  case Strategy::bbox: return "bbox";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "part") return Strategy::part;
  if (name == "counting") return Strategy::counting;
  if (name == "bbox") return Strategy::bbox;
  throw InvalidInput("unknown strategy '" + name + "' (expected part, counting or bbox)");
}

CenterTable::CenterTable(std::vector<std::string> image_ids, std::size_t channels,
                         std::size_t height, std::size_t width)
    : image_ids_(std::move(image_ids)), channels_(channels), height_(height), width_(width),
      entries_(image_ids_.size() * channels) {}

double CenterTable::image_diagonal() const {
  return std::hypot(static_cast<double>(width_), static_cast<double>(height_));
}

CenterTable compute_center_table(const Network& net, std::span<const Tensor> images,
                                 std::span<const std::string> image_ids, std::size_t layer,
                                 const GmmConfig& cfg) {
  cfg.validate();
  if (images.size() != image_ids.size()) throw InvalidInput("image/id count mismatch");
  if (layer >= net.num_layers()) throw InvalidInput("layer " + std::to_string(layer) + " does not exist");
  for (const auto& img : images)
    if (img.shape() != net.input_shape()) throw InvalidInput("image does not match network input shape");
  const std::size_t channels = net.channels(layer);
  const Shape& in = net.input_shape();
  CenterTable table({image_ids.begin(), image_ids.end()}, channels, in[1], in[2]);
  parallel_for(images.size(), [&](std::size_t i) {
    const auto outs = net.forward_to(images[i], layer);
    for (std::size_t k = 0; k < channels; ++k)
      table.at(i, k) = fit_activation_center(channel_gradient_map(net, images[i], outs, layer, k), cfg);
  });
  return table;
}

ChannelAssociation select_channel_part(const CenterTable& table,
                                       std::span<const std::optional<Point2>> positions,
                                       int part_id) {
  if (positions.size() != table.num_images())
    throw InvalidInput("need one annotation slot per table image");
  const auto visible = static_cast<std::size_t>(
      std::count_if(positions.begin(), positions.end(), [](const auto& p) { return p.has_value(); }));
  const double min_support = kMinUsableFraction * static_cast<double>(visible);

  bool found = false;
  double best_sum = 0.0;
  ChannelAssociation best{part_id, 0, 0.0, Strategy::part};
  for (std::size_t k = 0; k < table.num_channels(); ++k) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < table.num_images(); ++i) {
      const auto& c = table.at(i, k);
      if (!positions[i] || c.occluded) continue;
      const double dx = c.position.x - positions[i]->x, dy = c.position.y - positions[i]->y;
      sum += dx * dx + dy * dy;
      ++used;
    }
    if (used == 0 || static_cast<double>(used) < min_support) continue;
    if (!found || sum < best_sum) {
      best_sum = sum;
      best.channel = k;
      best.score = sum / static_cast<double>(used);
      found = true;
    }
  }
  if (!found)
    throw NoAssociation("part " + std::to_string(part_id) +
                        ": no channel has a usable image (visible part and non-occluded center)");
  return best;
}

std::vector<ChannelAssociation> select_channels_counting(const CenterTable& table,
                                                         std::span<const BoundingBox> boxes,
                                                         std::size_t proposals) {
  check_boxes(table, boxes, proposals);
  std::vector<double> count(table.num_channels(), 0.0);
  for (std::size_t k = 0; k < table.num_channels(); ++k)
    for (std::size_t i = 0; i < table.num_images(); ++i) {
      const auto& c = table.at(i, k);
      if (!c.occluded && boxes[i].contains(c.position)) count[k] += 1.0;
    }
  std::vector<ChannelAssociation> out;
  int rank = 0;
  for (auto k : top_channels(count, proposals, std::greater<>()))
    out.push_back({rank++, k, count[k], Strategy::counting});
  return out;
}

std::vector<ChannelAssociation> select_channels_bbox(const CenterTable& table,
                                                     std::span<const BoundingBox> boxes,
                                                     std::size_t proposals) {
  check_boxes(table, boxes, proposals);
  const double penalty = table.image_diagonal();
  std::vector<double> cost(table.num_channels(), 0.0);
  for (std::size_t k = 0; k < table.num_channels(); ++k)
    for (std::size_t i = 0; i < table.num_images(); ++i) {
      const auto& c = table.at(i, k);
      cost[k] += c.occluded ? penalty : boxes[i].distance(c.position);
    }
  std::vector<ChannelAssociation> out;
  int rank = 0;
  for (auto k : top_channels(cost, proposals, std::less<>()))
    out.push_back({rank++, k, cost[k], Strategy::bbox});
  return out;
}

void write_associations(std::span<const ChannelAssociation> assoc, std::ostream& out) {
  out << "part_id,channel,score,strategy\n";
  for (const auto& a : assoc)
    out << a.part_id << ',' << a.channel << ',' << csv::exact(a.score) << ','
        << strategy_name(a.strategy) << '\n';
}

void write_associations(std::span<const ChannelAssociation> assoc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_associations(assoc, out);
}

std::vector<ChannelAssociation> read_associations(std::istream& in, const std::string& name) {
  csv::Reader reader(in, name, {"part_id", "channel", "score", "strategy"});
  std::vector<ChannelAssociation> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ChannelAssociation a;
    a.part_id = static_cast<int>(reader.to_int(f[0]));
    const long long ch = reader.to_int(f[1]);
    if (ch < 0) reader.fail("negative channel index");
    a.channel = static_cast<std::size_t>(ch);
    a.score = reader.to_double(f[2]);
    try {
      a.strategy = parse_strategy(f[3]);
    } catch (const InvalidInput& e) {
      reader.fail(e.what());
    }
    out.push_back(a);
  }
  return out;
}

std::vector<ChannelAssociation> read_associations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_associations(in, path.string());
}

} // namespace partdet
