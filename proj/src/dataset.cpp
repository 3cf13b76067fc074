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

#include "partdet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "partdet/csv.hpp"
#include "partdet/error.hpp"
#include "partdet/image_io.hpp"

namespace partdet {
namespace {

std::ifstream open_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::filesystem::path resolve(const std::filesystem::path& root, const std::filesystem::path& p) {
  return p.is_absolute() ? p : root / p;
}

} // namespace

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = csv::trim(line.substr(0, eq));
    const std::filesystem::path value = csv::trim(line.substr(eq + 1));
    if (key == "images") m.images = value;
    else if (key == "parts") m.parts = value;
    else if (key == "bboxes") m.bboxes = value;
    else if (key == "split") m.split = value;
    else throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    seen.insert(key);
  }
  for (const char* key : {"images", "parts", "bboxes", "split"})
    if (!seen.count(key)) throw FormatError(path.string() + ": missing key '" + key + "'");
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "images=" << images.generic_string() << "\nparts=" << parts.generic_string()
      << "\nbboxes=" << bboxes.generic_string() << "\nsplit=" << split.generic_string() << '\n';
}

std::vector<std::size_t> Dataset::indices(bool train) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].is_train == train) out.push_back(i);
  return out;
}

std::vector<int> Dataset::part_ids() const {
  std::set<int> ids;
  for (const auto& p : parts) ids.insert(p.part_id);
  return {ids.begin(), ids.end()};
}

std::size_t Dataset::num_classes() const {
  int m = -1;
  for (const auto& r : records) m = std::max(m, r.label);
  return static_cast<std::size_t>(m + 1);
}

std::vector<std::optional<Point2>> Dataset::part_positions(int part_id,
                                                           const std::vector<std::size_t>& which) const {
  std::map<std::string, Point2> visible;
  for (const auto& p : parts)
    if (p.part_id == part_id && p.visible) visible[p.image_id] = p.position;
  std::vector<std::optional<Point2>> out;
  for (auto i : which) {
    auto it = visible.find(records[i].id);
    out.push_back(it == visible.end() ? std::nullopt : std::optional<Point2>(it->second));
  }
  return out;
}

const BoundingBox& Dataset::box(const std::string& image_id) const {
  auto it = boxes.find(image_id);
  if (it == boxes.end()) throw InvalidInput("no bounding box for image " + image_id);
  return it->second;
}

std::vector<PartAnnotation> read_parts(std::istream& in, const std::string& name) {
  csv::Reader reader(in, name, {"image_id", "part_id", "x", "y", "visible"});
  std::vector<PartAnnotation> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    PartAnnotation a;
    a.image_id = f[0];
    a.part_id = static_cast<int>(reader.to_int(f[1]));
    a.position = {reader.to_double(f[2]), reader.to_double(f[3])};
    a.visible = reader.to_bool(f[4]);
    out.push_back(std::move(a));
  }
  return out;
}

void write_parts(const std::vector<PartAnnotation>& parts, std::ostream& out) {
  out << "image_id,part_id,x,y,visible\n";
  for (const auto& p : parts)
    out << p.image_id << ',' << p.part_id << ',' << csv::exact(p.position.x) << ','
        << csv::exact(p.position.y) << ',' << (p.visible ? 1 : 0) << '\n';
}

Dataset load_dataset(const DatasetManifest& m) {
  Dataset ds;
  std::map<std::string, std::size_t> by_id;
  {
    const auto path = resolve(m.root, m.images);
    auto in = open_table(path);
    csv::Reader reader(in, path.string(), {"image_id", "path", "label"});
    std::vector<std::string> f;
    while (reader.next(f)) {
      if (by_id.count(f[0])) reader.fail("duplicate image id '" + f[0] + "'");
      const long long label = reader.to_int(f[2]);
      if (label < 0) reader.fail("negative label");
      ImageRecord r{f[0], resolve(m.root, f[1]), static_cast<int>(label), true};
      if (!std::filesystem::exists(r.path)) reader.fail("image file " + r.path.string() + " does not exist");
      by_id[r.id] = ds.records.size();
      ds.records.push_back(std::move(r));
    }
    if (ds.records.empty()) throw FormatError(path.string() + ": no images listed");
  }
  {
    const auto path = resolve(m.root, m.split);
    auto in = open_table(path);
    csv::Reader reader(in, path.string(), {"image_id", "is_train"});
    std::vector<std::string> f;
    while (reader.next(f)) {
      auto it = by_id.find(f[0]);
      if (it == by_id.end()) reader.fail("unknown image id '" + f[0] + "'");
      ds.records[it->second].is_train = reader.to_bool(f[1]);
    }
  }
  {
    const auto path = resolve(m.root, m.bboxes);
    auto in = open_table(path);
    csv::Reader reader(in, path.string(), {"image_id", "x", "y", "width", "height"});
    std::vector<std::string> f;
    while (reader.next(f)) {
      if (!by_id.count(f[0])) reader.fail("unknown image id '" + f[0] + "'");
      BoundingBox b{reader.to_double(f[1]), reader.to_double(f[2]), reader.to_double(f[3]),
                    reader.to_double(f[4])};
      if (!b.valid()) reader.fail("bounding box must have positive width and height");
      ds.boxes[f[0]] = b;
    }
  }
  {
    const auto path = resolve(m.root, m.parts);
    auto in = open_table(path);
    ds.parts = read_parts(in, path.string());
    for (const auto& p : ds.parts)
      if (!by_id.count(p.image_id))
        throw FormatError(path.string() + ": unknown image id '" + p.image_id + "'");
  }
  ds.images.reserve(ds.records.size());
  for (const auto& r : ds.records) ds.images.push_back(read_image(r.path));
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  return load_dataset(DatasetManifest::load(manifest_path));
}

std::vector<PartAnnotation> read_cub_part_locs(std::istream& in, const std::string& name) {
  std::vector<PartAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError(name + ":" + std::to_string(lineno) + ": " + what);
  };
  auto number = [&](const std::string& tok, auto& v) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("bad number '" + tok + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> cols;
    for (std::string tok; ss >> tok;) cols.push_back(tok);
    if (cols.empty()) continue;
    if (cols.size() != 5) fail("expected 5 fields, found " + std::to_string(cols.size()));
    PartAnnotation a;
    a.image_id = cols[0];
    number(cols[1], a.part_id);
    number(cols[2], a.position.x);
    number(cols[3], a.position.y);
    int visible = 0;
    number(cols[4], visible);
    if (visible != 0 && visible != 1) fail("visibility must be 0 or 1");
    a.visible = visible == 1;
    out.push_back(std::move(a));
  }
  return out;
}

void write_cub_part_locs(const std::vector<PartAnnotation>& parts, std::ostream& out) {
  for (const auto& p : parts)
    out << p.image_id << ' ' << p.part_id << ' ' << csv::exact(p.position.x) << ' '
        << csv::exact(p.position.y) << ' ' << (p.visible ? 1 : 0) << '\n';
}

void import_cub_part_locs(std::istream& in, std::ostream& out, const std::string& name) {
  write_parts(read_cub_part_locs(in, name), out);
}

} // namespace partdet
