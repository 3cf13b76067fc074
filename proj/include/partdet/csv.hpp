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

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace partdet::csv {

/// Minimal reader for the project's comma-separated files: no quoting,
/// first line is a header, blank lines ignored. Errors name file and line.
class Reader {
public:
  Reader(std::istream& in, std::string name, std::vector<std::string> expected_header);

  /// Next data row with exactly the header's field count; false at EOF.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const noexcept { return line_; }
  const std::string& name() const noexcept { return name_; }

  [[noreturn]] void fail(const std::string& what) const;

  double to_double(const std::string& field) const;
  long long to_int(const std::string& field) const;
  bool to_bool(const std::string& field) const;

private:
  std::istream& in_;
  std::string name_;
  std::size_t columns_;
  std::size_t line_ = 0;
};

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

/// Fixed-point formatting with `decimals` places ("-0.00" becomes "0.00").
std::string fixed(double v, int decimals);
/// Shortest text that reads back to the same double.
std::string exact(double v);

} // namespace partdet::csv
