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
#include <span>
#include <vector>

#include "partdet/network.hpp"

namespace partdet {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Cosine-anneal the learning rate to zero over the run.
  bool anneal = false;
  /// Augmentation of (C, H, W) examples: random horizontal flips and
  /// translations of up to `max_shift` px with edge replication.
  bool flip = false;
  std::size_t max_shift = 0;
};

/// Horizontally flipped (optional) and translated copy of a (C, H, W)
/// image; pixels shifted in from outside repeat the nearest edge.
Tensor augment_image(const Tensor& image, bool flip, long shift_x, long shift_y);

struct TrainReport {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss; // running mean over each epoch's mini-batches
  double final_loss = 0.0; // trained network on the full set
  double final_accuracy = 0.0;
};

/// Softmax cross-entropy of the class scores against `label`.
double cross_entropy(std::span<const double> scores, std::size_t label);

double mean_loss(const Network& net, std::span<const Tensor> images,
                 std::span<const int> labels);
double accuracy(const Network& net, std::span<const Tensor> images, std::span<const int> labels);
int predict_class(const Network& net, const Tensor& image);

/// Mini-batch SGD with momentum on softmax cross-entropy. Operates on a
/// copy; parameters stay float-representable after every step.
Network train(const Network& net, std::span<const Tensor> images, std::span<const int> labels,
              const TrainConfig& cfg, TrainReport* report = nullptr);

} // namespace partdet
