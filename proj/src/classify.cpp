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

#include "partdet/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

#include "partdet/binary_io.hpp"
#include "partdet/csv.hpp"
#include "partdet/error.hpp"
#include "partdet/image_io.hpp"
#include "partdet/random.hpp"

namespace partdet {
namespace {

constexpr char kMagic[4] = {'P', 'D', 'D', 'M'};

std::vector<double> hidden_activations(const Network& net, const Tensor& image, std::size_t layer) {
  const Shape& in = net.input_shape();
  const Tensor warped = resize_bilinear(image, in[1], in[2]);
  auto outs = net.forward_to(warped, layer);
  return std::move(outs.back().values());
}

} // namespace

std::size_t patch_side(std::size_t height, std::size_t width, double lambda) {
  if (height == 0 || width == 0) throw InvalidInput("image extents must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidInput("lambda must lie in (0, 1]");
  const double raw = std::round(std::sqrt(static_cast<double>(height) * static_cast<double>(width) * lambda));
  const auto p = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(p, std::min(height, width));
}

PatchRect patch_rect(std::size_t height, std::size_t width, Point2 center, std::size_t side) {
  if (side == 0 || side > std::min(height, width)) throw InvalidInput("patch side out of range");
  auto place = [side](double c, std::size_t extent) {
    const double start = std::floor(c + 0.5) - static_cast<double>(side / 2);
    const double hi = static_cast<double>(extent - side);
    return static_cast<std::size_t>(std::clamp(start, 0.0, hi));
  };
  return {place(center.x, width), place(center.y, height), side};
}

Tensor extract_patch(const Tensor& image, Point2 center, std::size_t side) {
  if (image.rank() != 3) throw InvalidInput("image must be (C, H, W)");
  const std::size_t C = image.extent(0);
  const PatchRect r = patch_rect(image.extent(1), image.extent(2), center, side);
  Tensor patch({C, side, side});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) patch.at(c, y, x) = image.at(c, r.y0 + y, r.x0 + x);
  return patch;
}

FeatureLayout feature_layout(const Network& net, const FeatureConfig& cfg) {
  if (cfg.hidden_layer >= net.num_layers())
    throw InvalidInput("hidden layer " + std::to_string(cfg.hidden_layer) + " does not exist");
  return {cfg.part_ids, net.output_size(cfg.hidden_layer)};
}

FeatureVector feature_vector(const Network& net, const Tensor& image,
                             std::span<const PartDetection> detections, const FeatureConfig& cfg) {
  FeatureVector fv{feature_layout(net, cfg), {}};
  if (image.rank() != 3 || image.extent(0) != net.input_shape()[0])
    throw InvalidInput("image channel count does not match network input");
  if (detections.size() != cfg.part_ids.size())
    throw InvalidInput("got " + std::to_string(detections.size()) + " detections for " +
                       std::to_string(cfg.part_ids.size()) + " configured parts");
  for (std::size_t j = 0; j < detections.size(); ++j)
    if (detections[j].part_id != cfg.part_ids[j])
      throw InvalidInput("detection " + std::to_string(j) + " is part " +
                         std::to_string(detections[j].part_id) + ", expected part " +
                         std::to_string(cfg.part_ids[j]));

  fv.values.assign(fv.layout.length(), 0.0);
  auto global = hidden_activations(net, image, cfg.hidden_layer);
  std::copy(global.begin(), global.end(), fv.values.begin());
  const std::size_t side = patch_side(image.extent(1), image.extent(2), cfg.lambda);
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (detections[j].occluded) continue;
    const auto act = hidden_activations(net, extract_patch(image, detections[j].position, side),
                                        cfg.hidden_layer);
    std::copy(act.begin(), act.end(), fv.values.begin() + static_cast<std::ptrdiff_t>(fv.layout.offset(j + 1)));
  }
  return fv;
}

LinearOvaModel train_classifier(std::span<const std::vector<double>> features,
                                std::span<const int> labels, const ClassifierConfig& cfg,
                                std::size_t num_parts) {
  if (features.empty() || features.size() != labels.size())
    throw InvalidInput("need equally many (non-zero) feature vectors and labels");
  const std::size_t dim = features[0].size();
  for (const auto& f : features)
    if (f.size() != dim) throw InvalidInput("feature vectors differ in length");
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw InvalidInput("negative class label");
    max_label = std::max(max_label, l);
  }
  const auto classes = static_cast<std::size_t>(max_label + 1);
  std::vector<std::size_t> per_class(classes, 0);
  for (int l : labels) ++per_class[static_cast<std::size_t>(l)];
  if (classes < 2) throw InvalidInput("classifier needs at least two classes");
  for (std::size_t c = 0; c < classes; ++c)
    if (per_class[c] == 0) throw InvalidInput("class " + std::to_string(c) + " has no examples");
  if (!(cfg.regularization >= 0.0) || !(cfg.learning_rate > 0.0))
    throw InvalidInput("bad classifier hyperparameters");

  LinearOvaModel model;
  model.num_parts = num_parts;
  model.weights.assign(classes, std::vector<double>(dim, 0.0));
  model.bias.assign(classes, 0.0);

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const double eta = cfg.learning_rate / (1.0 + cfg.learning_rate * cfg.regularization * static_cast<double>(t));
      ++t;
      const auto& x = features[i];
      for (std::size_t c = 0; c < classes; ++c) {
        auto& w = model.weights[c];
        const double y = labels[i] == static_cast<int>(c) ? 1.0 : -1.0;
        double score = model.bias[c];
        for (std::size_t d = 0; d < dim; ++d) score += w[d] * x[d];
        const double shrink = 1.0 - eta * cfg.regularization;
        if (y * score < 1.0) {
          for (std::size_t d = 0; d < dim; ++d) w[d] = shrink * w[d] + eta * y * x[d];
          model.bias[c] += eta * y;
        } else if (shrink != 1.0) {
          for (auto& v : w) v *= shrink;
        }
      }
    }
  }
  for (auto& w : model.weights)
    for (auto& v : w) v = static_cast<float>(v);
  for (auto& b : model.bias) b = static_cast<float>(b);
  return model;
}

std::vector<double> class_scores(const LinearOvaModel& model, std::span<const double> features) {
  if (features.size() != model.feature_length())
    throw InvalidInput("feature length " + std::to_string(features.size()) + " does not match model (" +
                       std::to_string(model.feature_length()) + ")");
  std::vector<double> scores(model.num_classes());
  for (std::size_t c = 0; c < scores.size(); ++c) {
    double s = model.bias[c];
    for (std::size_t d = 0; d < features.size(); ++d) s += model.weights[c][d] * features[d];
    scores[c] = s;
  }
  return scores;
}

int predict(const LinearOvaModel& model, std::span<const double> features) {
  const auto scores = class_scores(model, features);
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

void check_layout(const LinearOvaModel& model, const FeatureLayout& layout) {
  if (model.num_parts != layout.num_parts() || model.feature_length() != layout.length())
    throw InvalidInput("model was trained on " + std::to_string(model.num_parts) + " parts / " +
                       std::to_string(model.feature_length()) + " features, layout has " +
                       std::to_string(layout.num_parts()) + " parts / " +
                       std::to_string(layout.length()) + " features");
}

void save_model(const LinearOvaModel& model, std::ostream& out) {
  out.write(kMagic, 4);
  binary::write_u32(out, kModelVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  binary::write_u32(out, static_cast<std::uint32_t>(model.feature_length()));
  binary::write_u32(out, static_cast<std::uint32_t>(model.num_parts));
  for (const auto& w : model.weights)
    for (double v : w) binary::write_f32(out, static_cast<float>(v));
  for (double b : model.bias) binary::write_f32(out, static_cast<float>(b));
  if (!out) throw IoError("failed writing model");
}

void save_model(const LinearOvaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

LinearOvaModel load_model(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4))
    throw FormatError("not a PDDM model file");
  std::uint32_t version = 0, classes = 0, length = 0, parts = 0;
  if (!binary::read_u32(in, version)) throw FormatError("truncated model header");
  if (version != kModelVersion)
    throw UnsupportedVersion("model file version " + std::to_string(version) + " (supported: " +
                             std::to_string(kModelVersion) + ")");
  if (!binary::read_u32(in, classes) || !binary::read_u32(in, length) || !binary::read_u32(in, parts))
    throw FormatError("truncated model header");
  if (classes < 2 || length == 0 || length % (parts + 1) != 0)
    throw FormatError("inconsistent model header");
  LinearOvaModel m;
  m.num_parts = parts;
  m.weights.assign(classes, std::vector<double>(length));
  m.bias.assign(classes, 0.0);
  float f = 0.0f;
  for (std::uint32_t c = 0; c < classes; ++c)
    for (auto& v : m.weights[c]) {
      if (!binary::read_f32(in, f)) throw FormatError("truncated model weights of class " + std::to_string(c));
      v = f;
    }
  for (auto& b : m.bias) {
    if (!binary::read_f32(in, f)) throw FormatError("truncated model biases");
    b = f;
  }
  return m;
}

LinearOvaModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_model(in);
}

void write_features(std::span<const std::string> ids, std::span<const std::vector<double>> features,
                    std::ostream& out) {
  if (ids.size() != features.size()) throw InvalidInput("id/feature count mismatch");
  out << "image_id";
  const std::size_t dim = features.empty() ? 0 : features[0].size();
  for (std::size_t d = 0; d < dim; ++d) out << ",f" << d;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (double v : features[i]) out << ',' << csv::exact(v);
    out << '\n';
  }
}

} // namespace partdet
