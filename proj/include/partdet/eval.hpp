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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "partdet/detection.hpp"
#include "partdet/discovery.hpp"

namespace partdet {

/// |pred - gt| / diagonal(box).
double normalized_error(Point2 pred, Point2 gt, const BoundingBox& box);

struct PartReport {
  int part_id = 0;
  double mean_error = 0.0;
  std::size_t count = 0;
  std::size_t skipped = 0; // visible ground truth, occluded prediction
  std::vector<double> sorted_errors;
};

struct LocalizationReport {
  std::vector<PartReport> parts; // ascending part id
  double overall_mean = 0.0; // mean of the per-part means over parts with count > 0
};

/// Joins detections with visible annotations and per-image boxes on
/// (image_id, part_id). Throws InvalidInput when nothing joins.
LocalizationReport localization_report(std::span<const ImageDetection> detections,
                                       std::span<const PartAnnotation> annotations,
                                       const std::map<std::string, BoundingBox>& boxes);

/// Writes `report.csv` (part_id,mean_error,count,skipped) and one
/// `curve_part<id>.csv` (rank,error; rank from 1) per part into `dir`.
void write_report(const LocalizationReport& report, const std::filesystem::path& dir);

/// Fraction of positions where predictions equal labels.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

} // namespace partdet
