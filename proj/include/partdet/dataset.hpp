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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partdet/discovery.hpp"
#include "partdet/tensor.hpp"

namespace partdet {

/// Flat key=value file naming the four dataset tables; relative paths are
/// resolved against the manifest's directory.
///   images = images.csv   (image_id,path,label)
///   parts  = parts.csv    (image_id,part_id,x,y,visible)
///   bboxes = bboxes.csv   (image_id,x,y,width,height)
///   split  = split.csv    (image_id,is_train)
struct DatasetManifest {
  std::filesystem::path root;
  std::filesystem::path images;
  std::filesystem::path parts;
  std::filesystem::path bboxes;
  std::filesystem::path split;

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct ImageRecord {
  std::string id;
  std::filesystem::path path;
  int label = 0;
  bool is_train = true;
};

struct Dataset {
  std::vector<ImageRecord> records;
  std::vector<Tensor> images; // (3, H, W) in [0, 1], aligned with records
  std::vector<PartAnnotation> parts;
  std::map<std::string, BoundingBox> boxes;

  std::vector<std::size_t> indices(bool train) const;
  std::vector<int> part_ids() const;
  std::size_t num_classes() const;
  /// Visible positions of `part_id` for the given records, nullopt elsewhere.
  std::vector<std::optional<Point2>> part_positions(int part_id,
                                                    const std::vector<std::size_t>& which) const;
  const BoundingBox& box(const std::string& image_id) const;
};

/// Loads and validates every table; errors name the file and line.
Dataset load_dataset(const DatasetManifest& manifest);
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Parses the parts table alone.
std::vector<PartAnnotation> read_parts(std::istream& in, const std::string& name);
void write_parts(const std::vector<PartAnnotation>& parts, std::ostream& out);

/// CUB-style `part_locs` (space separated: image_id part_id x y visible)
/// to and from the native parts table.
std::vector<PartAnnotation> read_cub_part_locs(std::istream& in, const std::string& name);
void write_cub_part_locs(const std::vector<PartAnnotation>& parts, std::ostream& out);
void import_cub_part_locs(std::istream& in, std::ostream& out, const std::string& name = "<stream>");

} // namespace partdet
