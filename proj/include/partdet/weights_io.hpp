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
#include <filesystem>
#include <iosfwd>

#include "partdet/network.hpp"

namespace partdet {

/// Weight container layout (all integers uint32 little-endian):
///   "PDDW" | version | layer count
///   per parameterized layer: layer index, then weight and bias tensors,
///   each as rank | extents... | float32 LE payload (row-major).
/// The architecture itself is not stored; loading fills a template network.
inline constexpr std::uint32_t kWeightsVersion = 1;

void save_weights(const Network& net, std::ostream& out);
void save_weights(const Network& net, const std::filesystem::path& path);

/// Reads parameters into a copy of `architecture`. Throws FormatError
/// (naming the layer index) on truncation or extent mismatch, and
/// UnsupportedVersion on a version other than kWeightsVersion.
Network load_weights(std::istream& in, const Network& architecture);
Network load_weights(const std::filesystem::path& path, const Network& architecture);

} // namespace partdet
