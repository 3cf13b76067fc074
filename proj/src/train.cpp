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

#include "partdet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "partdet/error.hpp"
#include "partdet/random.hpp"

namespace partdet {
namespace {

void check_dataset(const Network& net, std::span<const Tensor> images, std::span<const int> labels) {
  if (images.empty()) throw InvalidInput("training set is empty");
  if (images.size() != labels.size()) throw InvalidInput("image/label count mismatch");
  const auto classes = static_cast<int>(net.num_classes());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= classes)
      throw InvalidInput("label " + std::to_string(labels[i]) + " of example " +
                         std::to_string(i) + " outside [0, " + std::to_string(classes) + ")");
}

std::vector<double> softmax(std::span<const double> scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) z += (p[i] = std::exp(scores[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

} // namespace

Tensor augment_image(const Tensor& image, bool flip, long shift_x, long shift_y) {
  if (image.rank() != 3) throw InvalidInput("augmentation needs a (C, H, W) image");
  const auto H = static_cast<long>(image.extent(1)), W = static_cast<long>(image.extent(2));
  Tensor out(image.shape());
  for (std::size_t c = 0; c < image.extent(0); ++c)
    for (long y = 0; y < H; ++y) {
      const long sy = std::clamp(y - shift_y, 0L, H - 1);
      for (long x = 0; x < W; ++x) {
        long sx = std::clamp(x - shift_x, 0L, W - 1);
        if (flip) sx = W - 1 - sx;
        out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
            image.at(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
      }
    }
  return out;
}

double cross_entropy(std::span<const double> scores, std::size_t label) {
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  return std::log(z) + m - scores[label];
}

int predict_class(const Network& net, const Tensor& image) {
  const auto outs = net.forward(image);
  const auto scores = outs.back().data();
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double mean_loss(const Network& net, std::span<const Tensor> images, std::span<const int> labels) {
  check_dataset(net, images, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i)
    total += cross_entropy(net.forward(images[i]).back().data(), static_cast<std::size_t>(labels[i]));
  return total / static_cast<double>(images.size());
}

double accuracy(const Network& net, std::span<const Tensor> images, std::span<const int> labels) {
  check_dataset(net, images, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < images.size(); ++i) hits += predict_class(net, images[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

Network train(const Network& net, std::span<const Tensor> images, std::span<const int> labels,
              const TrainConfig& cfg, TrainReport* report) {
  check_dataset(net, images, labels);
  if (cfg.batch_size == 0) throw InvalidInput("batch size must be positive");
  Network model = net;
  if (report) {
    report->initial_loss = mean_loss(net, images, labels);
    report->epoch_loss.clear();
  }
  if (cfg.epochs == 0) {
    if (report) {
      report->final_loss = report->initial_loss;
      report->final_accuracy = accuracy(model, images, labels);
    }
    return model;
  }

  Rng rng(cfg.seed);
  auto params = model.parameter_views();
  std::vector<std::vector<double>> velocity;
  for (auto p : params) velocity.emplace_back(p.size(), 0.0);

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const bool augment = cfg.flip || cfg.max_shift > 0;
  const auto shift = static_cast<long>(cfg.max_shift);
  const std::size_t batches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(cfg.epochs * batches);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ParamGrads grads = model.zero_grads();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        Tensor augmented;
        if (augment) {
          const bool f = cfg.flip && rng.uniform() < 0.5;
          const long dx = static_cast<long>(rng.index(2 * cfg.max_shift + 1)) - shift;
          const long dy = static_cast<long>(rng.index(2 * cfg.max_shift + 1)) - shift;
          augmented = augment_image(images[i], f, dx, dy);
        }
        const Tensor& x = augment ? augmented : images[i];
        const auto outs = model.forward(x);
        epoch_loss += cross_entropy(outs.back().data(), static_cast<std::size_t>(labels[i]));
        auto prob = softmax(outs.back().data());
        prob[static_cast<std::size_t>(labels[i])] -= 1.0;
        Tensor g(outs.back().shape(), std::move(prob));
        model.backprop(x, outs, model.num_layers() - 1, std::move(g), &grads, false);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      const double lr = cfg.anneal ? 0.5 * cfg.learning_rate *
                                         (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps))
                                   : cfg.learning_rate;
      ++step;
      // grads are laid out per layer; walk them in the same order as params
      std::size_t v = 0;
      for (std::size_t k = 0; k < model.num_layers(); ++k) {
        if (grads.weight[k].size() == 0) continue;
        for (const Tensor* g : {&grads.weight[k], &grads.bias[k]}) {
          auto p = params[v];
          auto& vel = velocity[v];
          const bool decay = g == &grads.weight[k];
          for (std::size_t j = 0; j < p.size(); ++j) {
            double grad = (*g)[j] * scale;
            if (decay) grad += cfg.weight_decay * p[j];
            vel[j] = cfg.momentum * vel[j] - lr * grad;
            p[j] = static_cast<float>(p[j] + vel[j]);
          }
          ++v;
        }
      }
    }
    if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(images.size()));
  }
  if (report) {
    report->final_loss = mean_loss(model, images, labels);
    report->final_accuracy = accuracy(model, images, labels);
  }
  return model;
}

} // namespace partdet
