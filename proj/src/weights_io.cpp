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

#include "partdet/weights_io.hpp"

#include <fstream>
#include <string>
#include <variant>

#include "partdet/binary_io.hpp"
#include "partdet/error.hpp"

namespace partdet {
namespace {

constexpr char kMagic[4] = {'P', 'D', 'D', 'W'};

struct ParamRef {
  std::size_t layer;
  Tensor* weight;
  Tensor* bias;
};

std::vector<ParamRef> param_refs(std::vector<Layer>& layers) {
  std::vector<ParamRef> refs;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (auto* c = std::get_if<Conv2d>(&layers[k]))
      refs.push_back({k, &c->weight, &c->bias});
    else if (auto* d = std::get_if<Dense>(&layers[k]))
      refs.push_back({k, &d->weight, &d->bias});
  }
  return refs;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  binary::write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) binary::write_u32(out, static_cast<std::uint32_t>(e));
  for (double v : t.data()) binary::write_f32(out, static_cast<float>(v));
}

void read_tensor(std::istream& in, Tensor& t, std::size_t layer, const char* what) {
  const std::string where = "layer " + std::to_string(layer) + " " + what;
  std::uint32_t rank = 0;
  if (!binary::read_u32(in, rank)) throw FormatError("truncated weight file at " + where);
  if (rank != t.rank())
    throw FormatError(where + ": rank " + std::to_string(rank) + ", expected " +
                      std::to_string(t.rank()));
  for (std::size_t a = 0; a < rank; ++a) {
    std::uint32_t e = 0;
    if (!binary::read_u32(in, e)) throw FormatError("truncated weight file at " + where);
    if (e != t.extent(a))
      throw FormatError(where + ": extent " + std::to_string(a) + " is " + std::to_string(e) +
                        ", expected " + std::to_string(t.extent(a)));
  }
  for (auto& v : t.values()) {
    float f = 0.0f;
    if (!binary::read_f32(in, f)) throw FormatError("truncated weight file at " + where);
    v = f;
  }
}

} // namespace

void save_weights(const Network& net, std::ostream& out) {
  std::vector<Layer> layers = net.layers();
  const auto refs = param_refs(layers);
  out.write(kMagic, 4);
  binary::write_u32(out, kWeightsVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(refs.size()));
  for (const auto& r : refs) {
    binary::write_u32(out, static_cast<std::uint32_t>(r.layer));
    write_tensor(out, *r.weight);
    write_tensor(out, *r.bias);
  }
  if (!out) throw IoError("failed writing weights");
}

void save_weights(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_weights(net, out);
}

Network load_weights(std::istream& in, const Network& architecture) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4))
    throw FormatError("not a PDDW weight file");
  std::uint32_t version = 0, count = 0;
  if (!binary::read_u32(in, version)) throw FormatError("truncated weight file header");
  if (version != kWeightsVersion)
    throw UnsupportedVersion("weight file version " + std::to_string(version) +
                             " (supported: " + std::to_string(kWeightsVersion) + ")");
  if (!binary::read_u32(in, count)) throw FormatError("truncated weight file header");

  std::vector<Layer> layers = architecture.layers();
  const auto refs = param_refs(layers);
  if (count != refs.size())
    throw FormatError("weight file has " + std::to_string(count) +
                      " parameterized layers, network has " + std::to_string(refs.size()));
  for (const auto& r : refs) {
    std::uint32_t index = 0;
    if (!binary::read_u32(in, index))
      throw FormatError("truncated weight file at layer " + std::to_string(r.layer));
    if (index != r.layer)
      throw FormatError("layer " + std::to_string(r.layer) + ": record carries index " +
                        std::to_string(index));
    read_tensor(in, *r.weight, r.layer, "weight");
    read_tensor(in, *r.bias, r.layer, "bias");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after last layer record");
  return Network(architecture.input_shape(), std::move(layers));
}

Network load_weights(const std::filesystem::path& path, const Network& architecture) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_weights(in, architecture);
}

} // namespace partdet
