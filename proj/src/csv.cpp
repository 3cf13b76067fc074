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

#include "partdet/csv.hpp"

#include <charconv>
#include <cstdio>
#include <string>

#include "partdet/error.hpp"

namespace partdet::csv {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Reader::Reader(std::istream& in, std::string name, std::vector<std::string> expected_header)
    : in_(in), name_(std::move(name)), columns_(expected_header.size()) {
  std::string header;
  while (std::getline(in_, header)) {
    ++line_;
    if (!trim(header).empty()) break;
  }
  if (trim(header).empty()) fail("missing header");
  if (split(header, ',') != expected_header) {
    std::string want;
    for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
    fail("unexpected header '" + trim(header) + "', expected '" + want + "'");
  }
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (trim(text).empty()) continue;
    fields = split(text, ',');
    if (fields.size() != columns_)
      fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(fields.size()));
    return true;
  }
  return false;
}

void Reader::fail(const std::string& what) const {
  throw FormatError(name_ + ":" + std::to_string(line_) + ": " + what);
}

double Reader::to_double(const std::string& field) const {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) fail("not a number: '" + field + "'");
  return v;
}

long long Reader::to_int(const std::string& field) const {
  long long v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) fail("not an integer: '" + field + "'");
  return v;
}

bool Reader::to_bool(const std::string& field) const {
  if (field == "1" || field == "true") return true;
  if (field == "0" || field == "false") return false;
  fail("not a boolean: '" + field + "'");
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

} // namespace partdet::csv
