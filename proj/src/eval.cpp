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

#include "partdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>

#include "partdet/csv.hpp"
#include "partdet/error.hpp"

namespace partdet {

double normalized_error(Point2 pred, Point2 gt, const BoundingBox& box) {
  if (!box.valid()) throw InvalidInput("degenerate bounding box");
  return std::hypot(pred.x - gt.x, pred.y - gt.y) / box.diagonal();
}

LocalizationReport localization_report(std::span<const ImageDetection> detections,
                                       std::span<const PartAnnotation> annotations,
                                       const std::map<std::string, BoundingBox>& boxes) {
  std::map<std::pair<std::string, int>, const PartAnnotation*> truth;
  for (const auto& a : annotations) truth[{a.image_id, a.part_id}] = &a;

  std::map<int, PartReport> parts;
  for (const auto& d : detections) {
    auto t = truth.find({d.image_id, d.detection.part_id});
    if (t == truth.end() || !t->second->visible) continue;
    auto b = boxes.find(d.image_id);
    if (b == boxes.end()) continue;
    PartReport& r = parts[d.detection.part_id];
    r.part_id = d.detection.part_id;
    if (d.detection.occluded) {
      ++r.skipped;
      continue;
    }
    r.sorted_errors.push_back(normalized_error(d.detection.position, t->second->position, b->second));
  }
  if (parts.empty()) throw InvalidInput("no detection joins a visible annotation and a bounding box");

  LocalizationReport report;
  double sum_means = 0.0;
  std::size_t evaluated = 0;
  for (auto& [id, r] : parts) {
    std::sort(r.sorted_errors.begin(), r.sorted_errors.end());
    r.count = r.sorted_errors.size();
    if (r.count > 0) {
      r.mean_error = std::accumulate(r.sorted_errors.begin(), r.sorted_errors.end(), 0.0) /
                     static_cast<double>(r.count);
      sum_means += r.mean_error;
      ++evaluated;
    }
    report.parts.push_back(std::move(r));
  }
  report.overall_mean = evaluated ? sum_means / static_cast<double>(evaluated) : 0.0;
  return report;
}

void write_report(const LocalizationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "report.csv", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "report.csv").string());
  out << "part_id,mean_error,count,skipped\n";
  for (const auto& p : report.parts) {
    out << p.part_id << ',' << csv::fixed(p.mean_error, 6) << ',' << p.count << ',' << p.skipped << '\n';
    const auto curve_path = dir / ("curve_part" + std::to_string(p.part_id) + ".csv");
    std::ofstream curve(curve_path, std::ios::binary);
    if (!curve) throw IoError("cannot write " + curve_path.string());
    curve << "rank,error\n";
    for (std::size_t i = 0; i < p.sorted_errors.size(); ++i)
      curve << i + 1 << ',' << csv::fixed(p.sorted_errors[i], 6) << '\n';
  }
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw InvalidInput("prediction count " + std::to_string(predictions.size()) +
                       " differs from label count " + std::to_string(labels.size()));
  if (labels.empty()) throw InvalidInput("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

} // namespace partdet
