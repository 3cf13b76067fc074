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

#include "partdet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "partdet/csv.hpp"
#include "partdet/error.hpp"
#include "partdet/image_io.hpp"
#include "partdet/random.hpp"

namespace partdet {
namespace {

constexpr std::size_t kPalette = 4;

std::string image_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%05zu", index);
  return buf;
}

void paint(Tensor& img, std::size_t x, std::size_t y, const std::vector<double>& rgb) {
  for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = rgb[c];
}

} // namespace

void SyntheticSpec::validate() const {
  if (image_size < 32) throw InvalidInput("synthetic images must be at least 32 px");
  if (num_parts < 1 || num_parts > kPalette) throw InvalidInput("synthetic part count must be 1..4");
  if (num_classes < 2) throw InvalidInput("synthetic data needs at least 2 classes");
  if (variant == SyntheticVariant::shapes && num_classes > (std::size_t{1} << num_parts))
    throw InvalidInput("shapes variant supports at most 2^parts classes");
  if (variant == SyntheticVariant::fine_grained && num_classes > kPalette)
    throw InvalidInput("fine-grained variant supports at most 4 classes");
  if (train_count + test_count == 0) throw InvalidInput("synthetic sample count is zero");
}

std::vector<double> part_color(std::size_t part) {
  static const std::vector<std::vector<double>> colors = {
      {0.90, 0.15, 0.10}, {0.10, 0.25, 0.90}, {0.95, 0.75, 0.05}, {0.10, 0.75, 0.20}};
  return colors.at(part % colors.size());
}

std::vector<double> mark_color(std::size_t cls) {
  static const std::vector<std::vector<double>> colors = {
      {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {0.1, 0.85, 0.1}, {0.95, 0.95, 0.1}};
  return colors.at(cls % colors.size());
}

SyntheticSample render_sample(const SyntheticSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng(spec.seed, index);
  const double S = static_cast<double>(spec.image_size);
  const double scale = S / 64.0;
  const std::size_t n = spec.image_size;

  SyntheticSample s;
  s.label = static_cast<int>(index % spec.num_classes);
  s.part_radius = std::round(rng.uniform(5.0, 6.5) * scale * 2.0) / 2.0;

  // body: ellipse with parts evenly spread along the major axis
  const double a = rng.uniform(13.0, 19.0) * scale;
  const double b = rng.uniform(6.0, 9.0) * scale;
  // near-horizontal bodies; the flip below still swaps the part sides
  const double theta = rng.uniform(-0.5, 0.5);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ex = std::sqrt(a * a * ct * ct + b * b * st * st);
  const double ey = std::sqrt(a * a * st * st + b * b * ct * ct);
  const double r = s.part_radius;
  const double reach = 0.85 * a;
  const double hx = std::max(ex, reach * std::abs(ct) + r);
  const double hy = std::max(ey, reach * std::abs(st) + r);
  const double margin = 2.0;
  const double cx = rng.uniform(hx + margin, S - 1.0 - hx - margin);
  const double cy = rng.uniform(hy + margin, S - 1.0 - hy - margin);

  std::vector<int> shapes(spec.num_parts);
  for (std::size_t j = 0; j < spec.num_parts; ++j) {
    if (spec.variant == SyntheticVariant::shapes)
      shapes[j] = (s.label >> j) & 1;
    else
      shapes[j] = static_cast<int>(rng.index(2));
  }
  // flip the body so part 0 is not always on the same side of the axis
  const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
  for (std::size_t j = 0; j < spec.num_parts; ++j) {
    const double t = spec.num_parts == 1 ? 1.0
                                          : 1.0 - 2.0 * static_cast<double>(j) /
                                                      static_cast<double>(spec.num_parts - 1);
    s.part_centers.push_back({cx + dir * t * reach * ct, cy + dir * t * reach * st});
  }
  s.part_shapes = shapes;

  const double bg = rng.uniform(0.15, 0.4);
  const std::vector<double> body_color = {0.55 + rng.uniform(-0.05, 0.05), 0.55 + rng.uniform(-0.05, 0.05),
                                          0.50 + rng.uniform(-0.05, 0.05)};
  Tensor img({3, n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = bg + rng.uniform(-0.08, 0.08);

  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double u = dx * ct + dy * st, v = -dx * st + dy * ct;
      if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0) paint(img, x, y, body_color);
    }

  for (std::size_t j = 0; j < spec.num_parts; ++j) {
    const auto color = part_color(j);
    const Point2 p = s.part_centers[j];
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = static_cast<double>(x) - p.x, dy = static_cast<double>(y) - p.y;
        const double d2 = dx * dx + dy * dy;
        // shape 0: solid square, shape 1: ring
        const bool inside = shapes[j] == 0 ? (std::abs(dx) <= r && std::abs(dy) <= r)
                                           : (d2 <= r * r && d2 > 0.25 * r * r);
        if (inside) paint(img, x, y, color);
      }
  }

  if (spec.variant == SyntheticVariant::fine_grained) {
    const auto color = mark_color(static_cast<std::size_t>(s.label));
    const Point2 p = s.part_centers[0];
    const double half = std::round(0.4 * r);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = static_cast<double>(x) - p.x, dy = static_cast<double>(y) - p.y;
        if (std::abs(dx) <= half && std::abs(dy) <= half) paint(img, x, y, color);
      }
  }

  // quantize exactly as a PPM round trip would
  for (auto& v : img.values()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  s.image = std::move(img);

  double x0 = cx - ex, x1 = cx + ex, y0 = cy - ey, y1 = cy + ey;
  for (const auto& p : s.part_centers) {
    x0 = std::min(x0, p.x - r);
    x1 = std::max(x1, p.x + r);
    y0 = std::min(y0, p.y - r);
    y1 = std::max(y1, p.y + r);
  }
  s.box = {x0, y0, x1 - x0, y1 - y0};
  return s;
}

std::filesystem::path generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir / "images");
  std::ofstream images(dir / "images.csv", std::ios::binary);
  std::ofstream parts(dir / "parts.csv", std::ios::binary);
  std::ofstream boxes(dir / "bboxes.csv", std::ios::binary);
  std::ofstream split(dir / "split.csv", std::ios::binary);
  if (!images || !parts || !boxes || !split) throw IoError("cannot write dataset tables in " + dir.string());
  images << "image_id,path,label\n";
  parts << "image_id,part_id,x,y,visible\n";
  boxes << "image_id,x,y,width,height\n";
  split << "image_id,is_train\n";

  const std::size_t total = spec.train_count + spec.test_count;
  for (std::size_t i = 0; i < total; ++i) {
    const SyntheticSample s = render_sample(spec, i);
    const std::string id = image_id(i);
    const std::string rel = "images/" + id + ".ppm";
    write_image(s.image, dir / rel);
    images << id << ',' << rel << ',' << s.label << '\n';
    for (std::size_t j = 0; j < s.part_centers.size(); ++j)
      parts << id << ',' << j << ',' << csv::exact(s.part_centers[j].x) << ','
            << csv::exact(s.part_centers[j].y) << ",1\n";
    boxes << id << ',' << csv::exact(s.box.x) << ',' << csv::exact(s.box.y) << ','
          << csv::exact(s.box.width) << ',' << csv::exact(s.box.height) << '\n';
    split << id << ',' << (i < spec.train_count ? 1 : 0) << '\n';
  }
  DatasetManifest m;
  m.images = "images.csv";
  m.parts = "parts.csv";
  m.bboxes = "bboxes.csv";
  m.split = "split.csv";
  m.save(dir / "manifest.txt");
  return dir / "manifest.txt";
}

} // namespace partdet
