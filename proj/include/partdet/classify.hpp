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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "partdet/centers.hpp"
#include "partdet/detection.hpp"
#include "partdet/network.hpp"

namespace partdet {

/// Side of the square part patch: round(sqrt(n * m * lambda)) clamped to
/// [1, min(n, m)].
std::size_t patch_side(std::size_t height, std::size_t width, double lambda);

struct PatchRect {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t side = 0;
  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

/// Square of side p centered on `center`, shifted minimally to lie inside
/// an H x W image.
PatchRect patch_rect(std::size_t height, std::size_t width, Point2 center, std::size_t side);
Tensor extract_patch(const Tensor& image, Point2 center, std::size_t side);

/// Global block followed by one block per part, each `block_width` long.
struct FeatureLayout {
  std::vector<int> part_ids;
  std::size_t block_width = 0;

  std::size_t num_parts() const noexcept { return part_ids.size(); }
  std::size_t length() const noexcept { return (1 + part_ids.size()) * block_width; }
  std::size_t offset(std::size_t block) const noexcept { return block * block_width; }
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

struct FeatureVector {
  FeatureLayout layout;
  std::vector<double> values;
};

struct FeatureConfig {
  std::size_t hidden_layer = 0;
  double lambda = 0.1;
  std::vector<int> part_ids; // expected detection order
};

FeatureLayout feature_layout(const Network& net, const FeatureConfig& cfg);

/// Activations of the hidden layer on the image warped to the network
/// input, then on each warped part patch (zeros for occluded parts).
FeatureVector feature_vector(const Network& net, const Tensor& image,
                             std::span<const PartDetection> detections, const FeatureConfig& cfg);

struct ClassifierConfig {
  double regularization = 1e-4; // L2 strength
  double learning_rate = 0.01;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
};

/// One linear hinge-loss scorer per class; prediction is the argmax.
struct LinearOvaModel {
  std::size_t num_parts = 0;
  std::vector<std::vector<double>> weights; // [class][feature]
  std::vector<double> bias;

  std::size_t num_classes() const noexcept { return bias.size(); }
  std::size_t feature_length() const noexcept { return weights.empty() ? 0 : weights[0].size(); }
  friend bool operator==(const LinearOvaModel&, const LinearOvaModel&) = default;
};

/// Per-class subgradient descent on L2-regularized hinge loss, visiting
/// examples in a seeded order each epoch. Labels must cover >= 2 classes.
/// Final parameters are rounded to single precision.
LinearOvaModel train_classifier(std::span<const std::vector<double>> features,
                                std::span<const int> labels, const ClassifierConfig& cfg,
                                std::size_t num_parts = 0);

std::vector<double> class_scores(const LinearOvaModel& model, std::span<const double> features);
/// argmax of class scores, lowest class on ties.
int predict(const LinearOvaModel& model, std::span<const double> features);

/// Throws InvalidInput unless the model was trained on `layout`.
void check_layout(const LinearOvaModel& model, const FeatureLayout& layout);

/// "PDDM" | version | classes | feature length | parts (uint32 LE), then
/// float32 weights per class, then float32 biases.
inline constexpr std::uint32_t kModelVersion = 1;
void save_model(const LinearOvaModel& model, std::ostream& out);
void save_model(const LinearOvaModel& model, const std::filesystem::path& path);
LinearOvaModel load_model(std::istream& in);
LinearOvaModel load_model(const std::filesystem::path& path);

/// CSV `image_id,f0,f1,...`.
void write_features(std::span<const std::string> ids, std::span<const std::vector<double>> features,
                    std::ostream& out);

} // namespace partdet
