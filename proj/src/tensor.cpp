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

#include "partdet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "partdet/error.hpp"

namespace partdet {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  for (auto e : shape_)
    if (e == 0) throw InvalidInput("tensor extents must be positive");
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_)
    if (e == 0) throw InvalidInput("tensor extents must be positive");
  if (shape_size(shape_) != data_.size())
    throw InvalidInput("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape size " +
                       std::to_string(shape_size(shape_)));
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor& operator+=(Tensor& lhs, const Tensor& rhs) {
  if (lhs.shape() != rhs.shape()) throw InvalidInput("tensor shape mismatch in +=");
  auto a = lhs.data();
  auto b = rhs.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return lhs;
}

Tensor operator*(double s, const Tensor& t) {
  Tensor out = t;
  for (auto& v : out.values()) v *= s;
  return out;
}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor) {
  if (a.size() != b.size()) throw InvalidInput("length mismatch in relative error");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  return diff / std::max(max_abs(b), floor);
}

} // namespace partdet
