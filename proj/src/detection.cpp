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

#include "partdet/detection.hpp"

#include <fstream>
#include <map>
#include <string>

#include "partdet/csv.hpp"
#include "partdet/error.hpp"

namespace partdet {

GradientMap mask_outside_box(const GradientMap& map, const BoundingBox& box) {
  GradientMap out = map;
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x)
      if (!box.contains({static_cast<double>(x), static_cast<double>(y)})) out.at(y, x) = 0.0;
  return out;
}

std::vector<PartDetection> detect_parts(const Network& net, const Tensor& x, std::size_t layer,
                                        std::span<const ChannelAssociation> associations,
                                        const GmmConfig& cfg, const DetectOptions& options,
                                        DetectionStats* stats) {
  cfg.validate();
  if (associations.empty()) throw InvalidInput("no part associations given");
  if (x.shape() != net.input_shape()) throw InvalidInput("image does not match network input shape");
  const std::size_t channels = net.channels(layer);
  for (const auto& a : associations)
    if (a.channel >= channels)
      throw InvalidInput("association for part " + std::to_string(a.part_id) + " names channel " +
                         std::to_string(a.channel) + " but layer " + std::to_string(layer) +
                         " has " + std::to_string(channels));

  const auto outs = net.forward_to(x, layer);
  std::map<std::size_t, ActivationCenter> cache;
  std::vector<PartDetection> out;
  out.reserve(associations.size());
  for (const auto& a : associations) {
    auto it = cache.find(a.channel);
    if (it == cache.end()) {
      GradientMap map = channel_gradient_map(net, x, outs, layer, a.channel, options.reduction);
      if (stats) ++stats->backward_passes;
      if (options.restrict_to) map = mask_outside_box(map, *options.restrict_to);
      const ActivationCenter c = options.method == CenterMethod::gmm ? fit_activation_center(map, cfg)
                                                                      : max_position_center(map);
      it = cache.emplace(a.channel, c).first;
    }
    const ActivationCenter& c = it->second;
    out.push_back({a.part_id, c.position, c.occluded, a.channel, c.cluster_weight});
  }
  return out;
}

void write_detections(std::span<const ImageDetection> rows, std::ostream& out) {
  out << "image_id,part_id,x,y,occluded\n";
  for (const auto& r : rows) {
    const auto& d = r.detection;
    out << r.image_id << ',' << d.part_id << ',' << csv::fixed(d.occluded ? 0.0 : d.position.x, 2)
        << ',' << csv::fixed(d.occluded ? 0.0 : d.position.y, 2) << ',' << (d.occluded ? 1 : 0) << '\n';
  }
}

void write_detections(std::span<const ImageDetection> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_detections(rows, out);
}

std::vector<ImageDetection> read_detections(std::istream& in, const std::string& name) {
  csv::Reader reader(in, name, {"image_id", "part_id", "x", "y", "occluded"});
  std::vector<ImageDetection> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ImageDetection r;
    r.image_id = f[0];
    r.detection.part_id = static_cast<int>(reader.to_int(f[1]));
    r.detection.position = {reader.to_double(f[2]), reader.to_double(f[3])};
    r.detection.occluded = reader.to_bool(f[4]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ImageDetection> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_detections(in, path.string());
}

} // namespace partdet
