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

#include "partdet/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "partdet/error.hpp"

namespace partdet {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::string& name) {
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw FormatError(name + ": truncated PNM header");
  return tok;
}

std::size_t header_number(std::istream& in, const std::string& name) {
  const std::string tok = header_token(in, name);
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || v == 0) throw FormatError(name + ": bad PNM header field '" + tok + "'");
  return v;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

Raster read_pnm(std::istream& in, const std::string& name) {
  const std::string magic = header_token(in, name);
  Raster r;
  if (magic == "P5") r.channels = 1;
  else if (magic == "P6") r.channels = 3;
  else throw FormatError(name + ": unsupported PNM magic '" + magic + "'");
  r.width = header_number(in, name);
  r.height = header_number(in, name);
  if (header_number(in, name) != 255) throw FormatError(name + ": only maxval 255 is supported");
  // header_token consumed exactly one whitespace byte after maxval
  r.pixels.resize(r.width * r.height * r.channels);
  if (!in.read(reinterpret_cast<char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size())))
    throw FormatError(name + ": truncated pixel data");
  return r;
}

Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pnm(in, path.string());
}

void write_pnm(const Raster& r, std::ostream& out) {
  if (r.channels != 1 && r.channels != 3) throw InvalidInput("raster must have 1 or 3 channels");
  if (r.pixels.size() != r.width * r.height * r.channels) throw InvalidInput("raster size mismatch");
  out << (r.channels == 1 ? "P5" : "P6") << '\n' << r.width << ' ' << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
}

void write_pnm(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pnm(raster, out);
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor raster_to_tensor(const Raster& r) {
  Tensor t({r.channels, r.height, r.width});
  for (std::size_t y = 0; y < r.height; ++y)
    for (std::size_t x = 0; x < r.width; ++x)
      for (std::size_t c = 0; c < r.channels; ++c)
        t.at(c, y, x) = r.pixels[(y * r.width + x) * r.channels + c] / 255.0;
  return t;
}

Raster tensor_to_raster(const Tensor& image) {
  if (image.rank() != 3 || (image.extent(0) != 1 && image.extent(0) != 3))
    throw InvalidInput("image tensor must be (1|3, H, W)");
  Raster r{image.extent(2), image.extent(1), image.extent(0), {}};
  r.pixels.resize(r.width * r.height * r.channels);
  for (std::size_t y = 0; y < r.height; ++y)
    for (std::size_t x = 0; x < r.width; ++x)
      for (std::size_t c = 0; c < r.channels; ++c)
        r.pixels[(y * r.width + x) * r.channels + c] = to_byte(image.at(c, y, x));
  return r;
}

Tensor read_image(const std::filesystem::path& path) {
  Tensor t = raster_to_tensor(read_pnm(path));
  if (t.extent(0) == 1) {
    // gray -> RGB
    Tensor rgb({3, t.extent(1), t.extent(2)});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < t.size(); ++i) rgb[c * t.size() + i] = t[i];
    return rgb;
  }
  return t;
}

void write_image(const Tensor& image, const std::filesystem::path& path) {
  write_pnm(tensor_to_raster(image), path);
}

Raster heatmap_raster(const GradientMap& map) {
  Raster r{map.width, map.height, 1, std::vector<std::uint8_t>(map.values.size(), 0)};
  double peak = 0.0;
  for (double v : map.values) peak = std::max(peak, v);
  if (peak <= 0.0) return r;
  for (std::size_t i = 0; i < map.values.size(); ++i)
    r.pixels[i] = static_cast<std::uint8_t>(std::lround(std::max(0.0, map.values[i]) / peak * 255.0));
  return r;
}

Raster overlay_raster(const Tensor& image, std::span<const std::uint8_t> mask) {
  Tensor rgb = image;
  if (image.rank() == 3 && image.extent(0) == 1) {
    rgb = Tensor({3, image.extent(1), image.extent(2)});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < image.size(); ++i) rgb[c * image.size() + i] = image[i];
  }
  Raster r = tensor_to_raster(rgb);
  if (mask.size() != r.width * r.height) throw InvalidInput("mask size does not match image");
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) {
      r.pixels[3 * i] = 255;
      r.pixels[3 * i + 1] = 0;
      r.pixels[3 * i + 2] = 0;
    }
  return r;
}

Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width) {
  if (image.rank() != 3) throw InvalidInput("resize expects a (C, H, W) tensor");
  if (height == 0 || width == 0) throw InvalidInput("resize target must be non-empty");
  const std::size_t C = image.extent(0), H = image.extent(1), W = image.extent(2);
  if (H == height && W == width) return image;
  auto coord = [](std::size_t o, std::size_t out_n, std::size_t in_n) {
    if (out_n == 1 || in_n == 1) return 0.0;
    return static_cast<double>(o) * static_cast<double>(in_n - 1) / static_cast<double>(out_n - 1);
  };
  Tensor out({C, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = coord(y, height, H);
    const auto y0 = std::min(static_cast<std::size_t>(sy), H - 1);
    const std::size_t y1 = std::min(y0 + 1, H - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = coord(x, width, W);
      const auto x0 = std::min(static_cast<std::size_t>(sx), W - 1);
      const std::size_t x1 = std::min(x0 + 1, W - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < C; ++c) {
        // a + f * (b - a) keeps constant images exact
        const double top = image.at(c, y0, x0) + fx * (image.at(c, y0, x1) - image.at(c, y0, x0));
        const double bot = image.at(c, y1, x0) + fx * (image.at(c, y1, x1) - image.at(c, y1, x0));
        out.at(c, y, x) = top + fy * (bot - top);
      }
    }
  }
  return out;
}

} // namespace partdet
